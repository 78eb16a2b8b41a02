#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "milr/dataset.hpp"
#include "milr/em.hpp"
#include "milr/selection.hpp"
#include "milr/simulate.hpp"

namespace milr {

/// Fitted model container for the `fit`/`predict` round trip. Coefficients
/// live in the space the model was fitted in; when standardization was
/// applied, the stats travel with the model so prediction inputs can be
/// transformed the same way.
struct ModelFile {
    FitResult fit;
    std::vector<std::string> feature_names;
    std::optional<StandardizationStats> standardization;
};

void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

void save_fold_assignment(const FoldAssignment& folds, const std::string& path);

void save_cv_report_json(const CVReport& report, const std::string& path);
/// Plot-ready CSV: lambda, mean_deviance, se_deviance.
void save_cv_report_csv(const CVReport& report, const std::string& path);

void save_path_json(const LambdaPath& path, const std::string& file);

void save_estimation_table(const EstimationSummary& s, const std::string& path);
void save_selection_table(const SelectionRates& r, const std::string& selector,
                          const std::string& path);
void save_comparison_table(const std::vector<MethodOutcome>& rows,
                           const std::string& scheme, const std::string& path);

/// Reproducibility record written next to every CLI output.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, double> timing_seconds;
};

void save_manifest(const RunManifest& manifest, const std::string& path);

/// Deterministic float formatting shared by all CSV writers.
std::string format_double(double v);

}  // namespace milr
