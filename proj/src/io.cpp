#include "milr/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "milr/version.hpp"

namespace milr {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

json fit_to_json(const FitResult& fit) {
    return json{{"lambda", fit.lambda},
                {"intercept", fit.coef.intercept},
                {"beta", vector_to_json(fit.coef.beta)},
                {"iterations", fit.iterations},
                {"converged", fit.converged},
                {"deviance", fit.deviance},
                {"objective_increases", fit.objective_increases},
                {"failed", fit.failed},
                {"error", fit.error}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void save_model(const ModelFile& model, const std::string& path) {
    json j{{"format", "milr-model"},
           {"version", kVersion},
           {"fit", fit_to_json(model.fit)},
           {"feature_names", model.feature_names}};
    if (model.standardization) {
        j["standardization"] = {
            {"means", vector_to_json(model.standardization->means)},
            {"scales", vector_to_json(model.standardization->scales)},
            {"constant_columns", model.standardization->constant_columns},
            {"centered_only", model.standardization->centered_only}};
    }
    write_text(path, j.dump(2) + "\n");
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json j;
    in >> j;
    if (j.value("format", "") != "milr-model") {
        throw std::runtime_error("not a milr model file: " + path);
    }
    ModelFile model;
    const json& f = j.at("fit");
    model.fit.lambda = f.at("lambda").get<double>();
    model.fit.coef.intercept = f.at("intercept").get<double>();
    model.fit.coef.beta = vector_from_json(f.at("beta"));
    model.fit.iterations = f.value("iterations", 0);
    model.fit.converged = f.value("converged", false);
    model.fit.deviance = f.value("deviance", 0.0);
    model.feature_names =
        j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("standardization")) {
        StandardizationStats stats;
        stats.means = vector_from_json(j["standardization"].at("means"));
        stats.scales = vector_from_json(j["standardization"].at("scales"));
        stats.constant_columns =
            j["standardization"].value("constant_columns", std::vector<int>{});
        stats.centered_only = j["standardization"].value("centered_only", false);
        model.standardization = std::move(stats);
    }
    return model;
}

void save_fold_assignment(const FoldAssignment& folds,
                          const std::string& path) {
    json j{{"folds", folds.folds},
           {"seed", folds.seed},
           {"stratified", folds.stratified},
           {"fold_of_bag", folds.fold_of_bag}};
    write_text(path, j.dump(2) + "\n");
}

void save_cv_report_json(const CVReport& report, const std::string& path) {
    json folds = json::array();
    for (Eigen::Index f = 0; f < report.fold_deviances.rows(); ++f) {
        json row = json::array();
        for (Eigen::Index k = 0; k < report.fold_deviances.cols(); ++k)
            row.push_back(report.fold_deviances(f, k));
        folds.push_back(std::move(row));
    }
    json j{{"lambdas", report.lambdas},
           {"mean_deviance", report.mean_deviance},
           {"se_deviance", report.se_deviance},
           {"fold_deviances", std::move(folds)},
           {"chosen_lambda", report.chosen_lambda},
           {"boundary_minimum", report.boundary_minimum},
           {"folds", report.folds},
           {"seed", report.seed}};
    write_text(path, j.dump(2) + "\n");
}

void save_cv_report_csv(const CVReport& report, const std::string& path) {
    std::string text = "lambda,mean_deviance,se_deviance\n";
    for (std::size_t k = 0; k < report.lambdas.size(); ++k) {
        text += format_double(report.lambdas[k]) + "," +
                format_double(report.mean_deviance[k]) + "," +
                format_double(report.se_deviance[k]) + "\n";
    }
    write_text(path, text);
}

void save_path_json(const LambdaPath& path, const std::string& file) {
    json fits = json::array();
    for (const auto& fit : path.fits) fits.push_back(fit_to_json(fit));
    json j{{"lambdas", path.lambdas}, {"fits", std::move(fits)}};
    write_text(file, j.dump(2) + "\n");
}

void save_estimation_table(const EstimationSummary& s,
                           const std::string& path) {
    std::string text =
        "coefficient,truth,milr_mean,milr_sd,milr_se,naive_mean,naive_sd,"
        "naive_se\n";
    for (std::size_t k = 0; k < s.coef_names.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        text += s.coef_names[k] + "," + format_double(s.truth[i]) + "," +
                format_double(s.milr_mean[i]) + "," +
                format_double(s.milr_sd[i]) + "," +
                format_double(s.milr_se[i]) + "," +
                format_double(s.naive_mean[i]) + "," +
                format_double(s.naive_sd[i]) + "," +
                format_double(s.naive_se[i]) + "\n";
    }
    write_text(path, text);
}

void save_selection_table(const SelectionRates& r, const std::string& selector,
                          const std::string& path) {
    std::string text = "selector,tp,fp,tn,fn,replicates\n";
    text += selector + "," + format_double(r.tp) + "," + format_double(r.fp) +
            "," + format_double(r.tn) + "," + format_double(r.fn) + "," +
            std::to_string(r.replicates) + "\n";
    write_text(path, text);
}

void save_comparison_table(const std::vector<MethodOutcome>& rows,
                           const std::string& scheme, const std::string& path) {
    std::string text = "scheme,method,acc_mean,acc_se,auc_mean,auc_se,failures\n";
    for (const auto& row : rows) {
        text += scheme + "," + row.method + "," + format_double(row.acc_mean) +
                "," + format_double(row.acc_se) + "," +
                format_double(row.auc_mean) + "," + format_double(row.auc_se) +
                "," + std::to_string(row.failures) + "\n";
    }
    write_text(path, text);
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    json j{{"command", manifest.command},
           {"version", kVersion},
           {"config", manifest.config},
           {"seeds", manifest.seeds},
           {"timing_seconds", manifest.timing_seconds}};
    write_text(path, j.dump(2) + "\n");
}

}  // namespace milr
