#include "lampe/sigmoid_fit.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lampe {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

void SigmoidParams::validate() const {
    if (ceiling < 1) throw invalid_config("SigmoidParams: ceiling must be >= 1");
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw invalid_config("SigmoidParams: a and b must be finite");
    }
}

double mapping_length_real(std::int64_t l, const SigmoidParams& p) {
    p.validate();
    if (l < 1) throw precondition_error("mapping_length: l must be >= 1");
    return static_cast<double>(p.ceiling) * sigmoid(p.a * static_cast<double>(l) + p.b);
}

std::int64_t mapping_length(std::int64_t l, const SigmoidParams& p) {
    const double value = mapping_length_real(l, p);
    std::int64_t rounded = std::llround(value);
    if (rounded < 1) rounded = 1;
    if (rounded > l) rounded = l;
    return rounded;
}

SigmoidParams fit_sigmoid(std::span<const ObservationPoint> points, std::int64_t ceiling) {
    if (ceiling < 1) throw domain_error("fit_sigmoid: ceiling must be >= 1");
    if (points.size() < 2) {
        throw insufficient_data("fit_sigmoid: need at least 2 points, got " +
                                std::to_string(points.size()));
    }
    const double L = static_cast<double>(ceiling);
    for (const auto& pt : points) {
        if (pt.input_length < 1) {
            throw domain_error("fit_sigmoid: input_length must be >= 1");
        }
        if (!(pt.optimal_mapping_length > 0.0) || pt.optimal_mapping_length >= L) {
            throw domain_error("fit_sigmoid: mapping length must lie strictly inside (0, L); got m=" +
                               std::to_string(pt.optimal_mapping_length) +
                               " with L=" + std::to_string(ceiling));
        }
    }

    // y = logit(m/L) turns the curve into y = a*l + b.
    const double count = static_cast<double>(points.size());
    double mean_l = 0.0, mean_y = 0.0;
    for (const auto& pt : points) {
        mean_l += static_cast<double>(pt.input_length);
        mean_y += logit(pt.optimal_mapping_length / L);
    }
    mean_l /= count;
    mean_y /= count;

    double sxx = 0.0, sxy = 0.0;
    for (const auto& pt : points) {
        const double dl = static_cast<double>(pt.input_length) - mean_l;
        const double dy = logit(pt.optimal_mapping_length / L) - mean_y;
        sxx += dl * dl;
        sxy += dl * dy;
    }
    if (sxx == 0.0) {
        throw rank_error("fit_sigmoid: all input lengths identical, design matrix is singular");
    }

    SigmoidParams p;
    p.ceiling = ceiling;
    p.a = sxy / sxx;
    p.b = mean_y - p.a * mean_l;
    p.points_used = points.size();

    double ss = 0.0;
    for (const auto& pt : points) {
        const double predicted = L * sigmoid(p.a * static_cast<double>(pt.input_length) + p.b);
        const double err = predicted - pt.optimal_mapping_length;
        ss += err * err;
    }
    p.residual = std::sqrt(ss / count);
    return p;
}

std::int64_t default_ceiling(std::int64_t n) {
    if (n < 4) throw precondition_error("default_ceiling: n must be >= 4");
    return 3 * n / 4;
}

std::vector<ObservationPoint> read_observations_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    std::vector<ObservationPoint> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.find("input_length") != std::string::npos) continue;
        std::istringstream ls(line);
        ObservationPoint pt;
        char comma;
        if (!(ls >> pt.input_length >> comma >> pt.optimal_mapping_length) || comma != ',') {
            throw parse_error("bad observation row at line " + std::to_string(lineno) + " in " +
                              path.string());
        }
        points.push_back(pt);
    }
    return points;
}

void write_observations_csv(std::span<const ObservationPoint> points,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out.precision(17);  // lossless double round-trip
    out << "input_length,optimal_mapping_length\n";
    for (const auto& pt : points) {
        out << pt.input_length << ',' << pt.optimal_mapping_length << '\n';
    }
    if (!out) throw io_error("write failed: " + path.string());
}

std::string params_to_json(const SigmoidParams& p) {
    nlohmann::json doc{{"L", p.ceiling},
                       {"a", p.a},
                       {"b", p.b},
                       {"residual", p.residual},
                       {"points_used", p.points_used}};
    return doc.dump(2) + "\n";
}

SigmoidParams parse_params_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("params JSON: ") + e.what());
    }
    SigmoidParams p;
    try {
        p.ceiling = doc.at("L").get<std::int64_t>();
        p.a = doc.at("a").get<double>();
        p.b = doc.at("b").get<double>();
        p.residual = doc.value("residual", 0.0);
        p.points_used = doc.value("points_used", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("params JSON: ") + e.what());
    }
    return p;
}

SigmoidParams read_params_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_params_json(buf.str());
}

}  // namespace lampe
