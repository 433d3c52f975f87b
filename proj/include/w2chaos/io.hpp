#ifndef W2CHAOS_IO_HPP
#define W2CHAOS_IO_HPP

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "w2chaos/applications.hpp"
#include "w2chaos/chaos_model.hpp"

namespace w2chaos {

// Shortest round-trip decimal form; keeps file and CLI output byte-stable.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw std::runtime_error("float formatting failed");
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << content;
}

namespace detail {

inline BaseNoise noise_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "chi2_centered") return BaseNoise::chi2_centered();
        if (s == "chi2_centered_unitvar") return BaseNoise::chi2_unit_variance();
        throw std::invalid_argument("unknown noise id: " + s);
    }
    if (j.is_object() && j.contains("cumulants"))
        return BaseNoise::custom(j.at("cumulants").get<std::vector<double>>());
    throw std::invalid_argument("noise must be an id string or {\"cumulants\":[...]}");
}

inline std::pair<std::vector<double>, BaseNoise> parse_coefficient_payload(
    const std::string& text, Convention* convention) {
    std::string trimmed = text;
    const auto pos = trimmed.find_first_not_of(" \t\r\n");
    if (pos == std::string::npos) throw std::invalid_argument("empty coefficient file");

    if (trimmed[pos] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(trimmed);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("bad JSON: ") + e.what());
        }
        auto alphas = j.at("alphas").get<std::vector<double>>();
        BaseNoise noise =
            j.contains("noise") ? noise_from_json(j.at("noise")) : BaseNoise::chi2_centered();
        if (convention) {
            *convention = Convention::raw;
            if (j.contains("convention")) {
                const std::string c = j.at("convention").get<std::string>();
                if (c == "unit")
                    *convention = Convention::unit;
                else if (c != "raw")
                    throw std::invalid_argument("convention must be \"raw\" or \"unit\"");
            }
        }
        return {std::move(alphas), std::move(noise)};
    }

    // plain text: one float per line, '#' comments, chi-square noise implied
    std::vector<double> alphas;
    std::istringstream in(trimmed);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double v;
        while (ls >> v) alphas.push_back(v);
        if (!ls.eof() && ls.fail()) {
            std::string rest;
            ls.clear();
            ls >> rest;
            if (!rest.empty()) throw std::invalid_argument("bad token in coefficient file: " + rest);
        }
    }
    if (convention) *convention = Convention::raw;
    return {std::move(alphas), BaseNoise::chi2_centered()};
}

} // namespace detail

inline ChaosCoefficients load_coefficients(const std::string& path) {
    Convention conv = Convention::raw;
    auto [alphas, noise] = detail::parse_coefficient_payload(read_file(path), &conv);
    return ChaosCoefficients(std::move(alphas), std::move(noise), conv);
}

inline TargetSpec load_target(const std::string& path) {
    auto [alphas, noise] = detail::parse_coefficient_payload(read_file(path), nullptr);
    return TargetSpec(std::move(alphas), std::move(noise));
}

// Basis tabulation: CSV with header "x,e_1,...,e_q" on a uniform grid.
inline void load_tabulated_basis(const std::string& path, KernelSpec& kernel) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty basis file");
    if (line.rfind("x,", 0) != 0)
        throw std::invalid_argument("basis file must start with header \"x,e_1,...\"");
    const std::size_t q =
        static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')); // columns after x
    if (q == 0) throw std::invalid_argument("basis file has no function columns");

    kernel.basis = "tabulated";
    kernel.tab_x.clear();
    kernel.tab_e.assign(q, {});
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x;
        if (!(ls >> x)) throw std::invalid_argument("bad basis row: " + line);
        kernel.tab_x.push_back(x);
        for (std::size_t m = 0; m < q; ++m) {
            double v;
            if (!(ls >> v)) throw std::invalid_argument("short basis row: " + line);
            kernel.tab_e[m].push_back(v);
        }
    }
    if (kernel.tab_x.size() < 2) throw std::invalid_argument("basis needs at least 2 grid rows");
}

inline std::string rate_table_csv(const RateTable& table) {
    std::ostringstream out;
    out << "n,delta,sqrt_delta,certified_upper,cf_lower,w2_hat,w2_stderr\n";
    for (const RateRow& r : table.rows) {
        out << format_double(r.x) << ',' << format_double(r.delta) << ','
            << format_double(r.sqrt_delta) << ',' << format_double(r.certified_upper) << ','
            << format_double(r.cf_lower) << ',' << format_double(r.w2_hat) << ','
            << format_double(r.w2_stderr) << '\n';
    }
    out << "# family," << table.family << "\n";
    out << "# abscissa," << table.abscissa << "\n";
    out << "# slope_metric," << table.metric << "\n";
    out << "# slope," << format_double(table.slope.slope) << ",ci95,"
        << format_double(table.slope.ci95) << "\n";
    return out.str();
}

inline nlohmann::json rate_table_json(const RateTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const RateRow& r : table.rows) {
        rows.push_back({{"n", r.x},
                        {"delta", r.delta},
                        {"sqrt_delta", r.sqrt_delta},
                        {"certified_upper", r.certified_upper},
                        {"cf_lower", r.cf_lower},
                        {"w2_hat", r.w2_hat},
                        {"w2_stderr", r.w2_stderr}});
    }
    return {{"family", table.family},
            {"abscissa", table.abscissa},
            {"metric", table.metric},
            {"rows", rows},
            {"slope", table.slope.slope},
            {"slope_ci95", table.slope.ci95}};
}

} // namespace w2chaos

#endif
