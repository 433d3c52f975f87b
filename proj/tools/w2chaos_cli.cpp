// Command-line front end: every pipeline of the library behind one binary
// with machine-readable output.  Results go to stdout (or --out);
// diagnostics go to stderr.  Exit codes: 0 success, 2 validation error,
// 3 numeric-stability abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <complex>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "w2chaos/applications.hpp"
#include "w2chaos/chaos_model.hpp"
#include "w2chaos/io.hpp"
#include "w2chaos/matching_distance.hpp"
#include "w2chaos/transport_lab.hpp"

using nlohmann::json;
using namespace w2chaos;

namespace {

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size()) throw std::invalid_argument("bad number in list: " + item);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty numeric list");
    return out;
}

// "lo:hi:points[,anchor,...]"
std::vector<double> parse_t_grid(const std::string& spec) {
    const auto comma = spec.find(',');
    const std::string head = spec.substr(0, comma);
    std::vector<double> anchors;
    if (comma != std::string::npos) anchors = parse_list(spec.substr(comma + 1));
    const auto c1 = head.find(':');
    const auto c2 = head.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw std::invalid_argument("t-grid must look like lo:hi:points[,anchor...]");
    const double lo = std::stod(head.substr(0, c1));
    const double hi = std::stod(head.substr(c1 + 1, c2 - c1 - 1));
    const int points = std::stoi(head.substr(c2 + 1));
    return log_t_grid(lo, hi, points, anchors);
}

// "cos2pi:1,0.5" | "cospi:1,0.5" | "tab:path.csv:1,0.5"
KernelSpec parse_kernel(const std::string& spec) {
    const auto c1 = spec.find(':');
    if (c1 == std::string::npos)
        throw std::invalid_argument("kernel must look like basis:lambda1,lambda2,...");
    const std::string basis = spec.substr(0, c1);
    KernelSpec k;
    if (basis == "tab") {
        const auto c2 = spec.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw std::invalid_argument("tabulated kernel needs tab:path:lambdas");
        k.lambdas = parse_list(spec.substr(c2 + 1));
        load_tabulated_basis(spec.substr(c1 + 1, c2 - c1 - 1), k);
    } else {
        k.basis = basis;
        k.lambdas = parse_list(spec.substr(c1 + 1));
    }
    k.validate();
    return k;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_file(out_path, content);
}

json certified_json(const CertifiedBound& b) {
    json j = {{"value", b.value},
              {"branch", b.independent_branch ? "independent" : "dependent"},
              {"sqrt_delta", b.sqrt_delta},
              {"symbolic_factor", "none: constants are constructive"}};
    if (!b.independent_branch) j["power_sum_gaps"] = b.power_sum_gaps;
    return j;
}

struct CommonOpts {
    std::string coeffs_path;
    std::string target_path;
    std::string alphas;
    std::string out;
    std::string format = "json";
    std::uint64_t seed = 0;
    std::size_t samples = 100000;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    double rho = 0.0;
    double search_cap = 4.0;
    std::string t_grid;
};

TargetSpec target_from(const CommonOpts& o) {
    if (!o.target_path.empty()) return load_target(o.target_path);
    if (!o.alphas.empty()) return TargetSpec(parse_list(o.alphas), BaseNoise::chi2_centered());
    throw std::invalid_argument("need --target or --alphas");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cumulant discrepancies, certified bounds and Wasserstein-2 "
                 "estimates for linear combinations of i.i.d. variables"};
    app.require_subcommand(1);

    CommonOpts o;
    int out_code = 0;
    std::string route = "both";
    std::string family = "ustat";
    std::string n_list;
    std::string gamma1_list = "-0.55";
    std::string kernel_spec = "cos2pi:1,0.5";
    std::string scheme = "quad";
    std::string x_list;
    double a_scale = 1.0;
    double rho_param = 0.5;
    int m_order = 3;
    int nodes = 64;

    auto add_io = [&](CLI::App* cmd) {
        cmd->add_option("--out", o.out, "output path (default stdout)");
        cmd->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--threads", o.threads, "worker threads");
    };

    CLI::App* c_theta = app.add_subcommand("theta", "expanded Q polynomial coefficients");
    c_theta->add_option("--alphas", o.alphas, "target coefficients, comma separated");
    c_theta->add_option("--target", o.target_path, "target file");
    add_io(c_theta);

    CLI::App* c_delta = app.add_subcommand("delta", "discrepancy between a sequence and a target");
    c_delta->add_option("--coeffs", o.coeffs_path, "coefficient file")->required();
    c_delta->add_option("--target", o.target_path, "target file")->required();
    c_delta->add_option("--route", route, "roots|cumulants|both")
        ->check(CLI::IsMember({"roots", "cumulants", "both"}));
    add_io(c_delta);

    CLI::App* c_dsigma = app.add_subcommand("dsigma", "matching distance between unit vectors");
    c_dsigma->add_option("--coeffs", o.coeffs_path, "first vector file")->required();
    c_dsigma->add_option("--target", o.target_path, "second vector file")->required();
    add_io(c_dsigma);

    CLI::App* c_const = app.add_subcommand("constants", "constructive bound constants");
    c_const->add_option("--target", o.target_path, "target file");
    c_const->add_option("--alphas", o.alphas, "target coefficients");
    c_const->add_option("--search-cap", o.search_cap, "enumeration cap");
    add_io(c_const);

    CLI::App* c_w2 = app.add_subcommand("w2", "full distance sandwich");
    c_w2->add_option("--coeffs", o.coeffs_path)->required();
    c_w2->add_option("--target", o.target_path)->required();
    c_w2->add_option("--samples", o.samples, "Monte Carlo draws");
    c_w2->add_option("--seed", o.seed);
    c_w2->add_option("--rho", o.rho, "circle radius for the log-derivative gap");
    c_w2->add_option("--t-grid", o.t_grid, "lo:hi:points[,anchor...]");
    c_w2->add_option("--search-cap", o.search_cap);
    add_io(c_w2);

    CLI::App* c_sweep = app.add_subcommand("sweep", "rate study over a grid");
    c_sweep->add_option("--family", family, "ustat|qform|lowbound|rosenblatt")
        ->check(CLI::IsMember({"ustat", "qform", "lowbound", "rosenblatt"}));
    c_sweep->add_option("--n", n_list, "grid, comma separated");
    c_sweep->add_option("--a", a_scale, "U-statistic scale");
    c_sweep->add_option("--kernel", kernel_spec, "basis:lambdas or tab:path:lambdas");
    c_sweep->add_option("--gamma1", gamma1_list, "gamma1 grid (rosenblatt)");
    c_sweep->add_option("--rho-param", rho_param, "rho (rosenblatt)");
    c_sweep->add_option("--m", m_order, "cumulant order (rosenblatt)");
    c_sweep->add_option("--samples", o.samples, "Monte Carlo draws (0 disables)");
    c_sweep->add_option("--seed", o.seed);
    add_io(c_sweep);
    o.format = "csv"; // sweep default; reset below for other commands

    CLI::App* c_rb = app.add_subcommand("rosenblatt", "cumulants of the generalized variable");
    c_rb->add_option("--gamma1", gamma1_list)->required();
    c_rb->add_option("--rho-param", rho_param)->required();
    c_rb->add_option("--m", m_order);
    c_rb->add_option("--scheme", scheme, "quad|mc")->check(CLI::IsMember({"quad", "mc"}));
    c_rb->add_option("--nodes", nodes, "quadrature nodes per axis");
    c_rb->add_option("--samples", o.samples, "MC draws");
    c_rb->add_option("--seed", o.seed);
    add_io(c_rb);

    CLI::App* c_vg = app.add_subcommand("vg", "variance-gamma bridge");
    c_vg->add_option("--alphas", o.alphas, "two positive chi-square coefficients")->required();
    c_vg->add_option("--x", x_list, "density evaluation points");
    add_io(c_vg);

    const bool sweep_requested = [&] {
        for (int i = 1; i < argc; ++i)
            if (std::string(argv[i]) == "sweep") return true;
        return false;
    }();
    if (!sweep_requested) o.format = "json";

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (c_theta->parsed()) {
            const QPolynomial q = theta_coefficients(target_from(o));
            json j;
            j["theta"] = std::vector<double>(q.thetas.begin() + 2, q.thetas.end());
            j["degree"] = q.degree();
            emit(o.out, j.dump(2) + "\n");
        } else if (c_delta->parsed()) {
            const ChaosCoefficients c = load_coefficients(o.coeffs_path);
            const TargetSpec t = load_target(o.target_path);
            json j;
            if (route != "cumulants") j["delta_roots"] = delta_via_roots(c, t);
            if (route != "roots") j["delta_cumulants"] = delta_via_cumulants(c, t);
            if (route == "both") {
                const double dr = j["delta_roots"].get<double>();
                const double dc = j["delta_cumulants"].get<double>();
                j["agreement_abs"] = std::abs(dr - dc);
            }
            emit(o.out, j.dump(2) + "\n");
        } else if (c_dsigma->parsed()) {
            const ChaosCoefficients c = load_coefficients(o.coeffs_path);
            const TargetSpec t = load_target(o.target_path);
            const MatchingResult r =
                d_sigma(UnitSphereVector(c.alphas), UnitSphereVector(t.alphas_inf));
            json pairs = json::array();
            for (auto [pi, pj] : r.pairing) pairs.push_back({pi, pj});
            emit(o.out, json{{"d_sigma", r.distance}, {"pairing", pairs}}.dump(2) + "\n");
        } else if (c_const->parsed()) {
            const TargetSpec t = target_from(o);
            const BoundConstants bc = compute_bound_constants(t, o.search_cap, true);
            json j = {{"delta_x", bc.delta_x},
                      {"eta", bc.eta},
                      {"kappa", bc.kappa_const},
                      {"alpha_x", bc.alpha_x},
                      {"C_x", bc.C_x},
                      {"C_tilde_x", bc.C_tilde_x},
                      {"independent", bc.independent},
                      {"adherence_set", bc.adherence_set}};
            emit(o.out, j.dump(2) + "\n");
        } else if (c_w2->parsed()) {
            const ChaosCoefficients c = load_coefficients(o.coeffs_path);
            const TargetSpec t = load_target(o.target_path);
            json j;
            const double delta = delta_via_roots(c, t);
            j["delta"] = delta;
            j["sqrt_delta"] = std::sqrt(std::max(0.0, delta));
            j["delta_cumulant_route"] = delta_via_cumulants(c, t);

            const std::vector<double> grid =
                o.t_grid.empty() ? log_t_grid() : parse_t_grid(o.t_grid);
            const CFLowerBound lb = cf_lower_bound(c, t, grid);
            j["cf_lower"] = lb.bound;
            j["cf_lower_argmax_t"] = lb.argmax_t;

            if (o.samples > 0) {
                const SampleBatch sa = sample_chaos(c, o.samples, o.seed, o.threads);
                const SampleBatch sb =
                    sample_chaos(t.as_coefficients(), o.samples, o.seed + 1, o.threads);
                const W2Estimate e = empirical_w2(sa, sb);
                j["w2_hat"] = e.estimate;
                j["w2_stderr"] = e.stderr_;
                j["coupled_upper"] = coupled_w2_upper(c, t, o.samples, o.seed + 2, o.threads);
            }

            if (std::abs(c.sum_squares() - 1.0) <= kUnitSphereTol && t.on_unit_sphere()) {
                j["certified_upper"] = certified_json(certified_upper_bound(t, c, o.search_cap));
            } else {
                j["certified_upper"] = nullptr;
                std::cerr << "note: inputs are off the unit sphere, certified bound skipped\n";
            }

            if (o.rho > 0.0) {
                const int R = 2 * t.q() + 2;
                j["logderiv_gap"] = logderiv_gap_circle(c, t, o.rho);
                const SeriesGap sg =
                    cumulant_series_gap(cumulants_from_coefficients(c, R),
                                        cumulants_from_coefficients(t.as_coefficients(), R),
                                        o.rho, R);
                j["cumulant_series_gap"] = sg.series;
                j["cumulant_series_tail_bound"] = sg.tail_bound;
            }
            emit(o.out, j.dump(2) + "\n");
        } else if (c_sweep->parsed()) {
            SweepConfig cfg;
            cfg.samples = o.samples;
            cfg.seed = o.seed;
            cfg.threads = o.threads;
            if (family == "ustat") {
                cfg.family = SweepFamily::ustat;
                cfg.a = a_scale;
                cfg.grid = parse_list(n_list);
            } else if (family == "lowbound") {
                cfg.family = SweepFamily::lowbound_example;
                cfg.grid = parse_list(n_list);
            } else if (family == "qform") {
                cfg.family = SweepFamily::qform;
                cfg.kernel = parse_kernel(kernel_spec);
                cfg.grid = parse_list(n_list);
            } else {
                cfg.family = SweepFamily::rosenblatt;
                cfg.rho = rho_param;
                cfg.m = m_order;
                for (double g1 : parse_list(gamma1_list)) cfg.grid.push_back(-g1 - 0.5);
            }
            const RateTable table = rate_sweep(cfg);
            if (o.format == "csv")
                emit(o.out, rate_table_csv(table));
            else
                emit(o.out, rate_table_json(table).dump(2) + "\n");
        } else if (c_rb->parsed()) {
            const std::vector<double> g1s = parse_list(gamma1_list);
            const RosenblattParams p(g1s.at(0), rho_param);
            const CmScheme cs = scheme == "mc"
                                    ? CmScheme::monte_carlo(o.samples, o.seed, o.threads)
                                    : CmScheme::quadrature(nodes);
            const double A = rosenblatt_A(p);
            const IntegralEstimate cm = rosenblatt_Cm(p, m_order, cs);
            const IntegralEstimate km = rosenblatt_cumulant(p, m_order, cs);
            json j = {{"gamma1", p.gamma1},
                      {"gamma2", p.gamma2()},
                      {"rho", p.rho},
                      {"m", m_order},
                      {"A", A},
                      {"C_m", cm.value},
                      {"C_m_error", cm.error},
                      {"kappa_m", km.value},
                      {"kappa_m_error", km.error},
                      {"kappa_m_limit", y_rho_cumulant(p.rho, m_order)}};
            emit(o.out, j.dump(2) + "\n");
        } else if (c_vg->parsed()) {
            const std::vector<double> al = parse_list(o.alphas);
            if (al.size() != 2) throw std::invalid_argument("vg needs exactly two coefficients");
            const VGParams p = vg_from_chi_pair(al[0], al[1]);
            json j = {{"r", p.r},
                      {"theta", p.theta},
                      {"sigma", p.sigma},
                      {"mu", p.mu},
                      {"mean", p.mean()},
                      {"variance", p.variance()}};
            if (!x_list.empty()) {
                json dens = json::array();
                for (double x : parse_list(x_list))
                    dens.push_back({{"x", x}, {"density", vg_density(p, x)}});
                j["density"] = dens;
            }
            emit(o.out, j.dump(2) + "\n");
        }
    } catch (const NumericStabilityError& e) {
        std::cerr << "numeric-stability abort: " << e.what() << "\n";
        out_code = 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        out_code = 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        out_code = 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        out_code = 2;
    }
    return out_code;
}
