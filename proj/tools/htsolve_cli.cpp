#include "htsolve/apply.hpp"
#include "htsolve/errors.hpp"
#include "htsolve/hsvd.hpp"
#include "htsolve/problems.hpp"
#include "htsolve/softthresh.hpp"
#include "htsolve/solver.hpp"
#include "htsolve/tensor_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace htsolve;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunSpec {
    std::string problem;
    std::string input;
    std::optional<double> eps;
    std::optional<double> alpha;
    std::optional<double> beta1;
    std::optional<double> beta2;
    std::optional<double> omega;
    std::optional<double> rho;
    std::optional<long> seed;
    std::string tree = "balanced";
    int threads = 1;
    bool oracle = false;
    std::string out;
};

Problem load(const RunSpec& s)
{
    Config cfg = Config::load(s.problem);
    if (s.seed) cfg.set("problem.seed", std::to_string(*s.seed));
    return load_problem(cfg);
}

std::string join(const std::vector<Index>& v, char sep = ' ')
{
    std::ostringstream o;
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? std::string(1, sep) : "") << v[i];
    return o.str();
}

Index total(const std::vector<Index>& v)
{
    Index s = 0;
    for (Index x : v) s += x;
    return s;
}

fs::path out_dir(const RunSpec& s)
{
    fs::path p = s.out.empty() ? fs::path(".") : fs::path(s.out);
    fs::create_directories(p);
    return p;
}

void write_json(const fs::path& p, const json& j)
{
    std::ofstream f(p);
    if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
    f << j.dump(2) << '\n';
}

json bounds_json(const OperatorBounds& b)
{
    return {{"lower", b.lower}, {"upper", b.upper}, {"certified", b.certified}};
}

double oracle_error(const Problem& p, const HTensor& u)
{
    const DenseTensor ref = dense_solve(p);
    return (to_dense(u).data - ref.data).norm();
}

SolveConfig make_config(const Problem& p, const RunSpec& s, double eps)
{
    SolveConfig c = default_config(p.op, p.rhs, p.order(), eps, s.alpha.value_or(1.0));
    if (s.beta1) c.beta1 = *s.beta1;
    if (s.beta2) c.beta2 = *s.beta2;
    if (s.omega) c.omega = *s.omega;
    if (s.rho) c.rho = *s.rho;
    return c;
}

int cmd_solve(const RunSpec& s)
{
    const Problem p = load(s);
    const double eps = s.eps.value_or(1e-3);
    const SolveConfig cfg = make_config(p, s, eps);
    const SolveResult res = solve(p.op, p.rhs, cfg);
    const auto& r = res.report;

    const fs::path dir = out_dir(s);
    std::ofstream csv(dir / "trace.csv");
    csv << "k,j,eta,max_rank,ranks,support,residual_lo,residual_hi\n" << std::setprecision(17);
    json rows = json::array();
    for (const auto& row : r.trace) {
        Index mr = 0;
        for (Index x : row.ranks) mr = std::max(mr, x);
        csv << row.k << ',' << row.j << ',' << row.eta << ',' << mr << ',' << join(row.ranks) << ',' << total(row.support) << ','
            << row.residual_lo << ',' << row.residual_hi << '\n';
        rows.push_back({{"k", row.k}, {"j", row.j}, {"eta", row.eta}, {"ranks", row.ranks}, {"support", row.support},
                        {"residual_lo", row.residual_lo}, {"residual_hi", row.residual_hi}, {"seconds", row.seconds}});
    }
    json rep = {
        {"problem", p.name},
        {"eps", eps},
        {"config", {{"omega", cfg.omega}, {"rho", cfg.rho}, {"c_A", cfg.c_A}, {"eps0", cfg.eps0}, {"kappa1", cfg.kappa1},
                    {"kappa2", cfg.kappa2}, {"kappa3", cfg.kappa3}, {"beta1", cfg.beta1}, {"beta2", cfg.beta2}, {"alpha", cfg.alpha}}},
        {"bounds", bounds_json(p.op.bounds())},
        {"inner_steps", r.inner_steps},
        {"outer_steps", r.outer_steps},
        {"apriori_bound", r.apriori_bound},
        {"certificate", {{"lower", r.certificate_lower}, {"upper", r.certificate_upper}}},
        {"error_bound", r.error_bound},
        {"final_ranks", res.u.ranks()},
        {"final_support", total(std::vector<Index>([&] {
                              std::vector<Index> v;
                              for (const auto& x : res.u.support()) v.push_back(static_cast<Index>(x.size()));
                              return v;
                          }()))},
        {"diagnostics", {{"sigma_decay_rate", r.diagnostics.sigma_decay_rate}, {"contraction_s", r.diagnostics.contraction_s},
                         {"contraction_quasinorms", r.diagnostics.contraction_quasinorms}}},
        {"threads", s.threads},
        {"seconds", r.seconds},
        {"trace", rows},
    };
    if (s.oracle) rep["oracle_error"] = oracle_error(p, res.u);
    write_json(dir / "report.json", rep);
    write_tensor_file((dir / "solution.ht").string(), res.u);
    std::cout << p.name << ": eps " << eps << ", outer " << r.outer_steps << ", inner " << r.inner_steps << ", certified error <= "
              << r.error_bound << ", max rank " << res.u.max_rank() << '\n';
    if (s.oracle) std::cout << "oracle error " << rep["oracle_error"].get<double>() << '\n';
    return 0;
}

int cmd_st_solve(const RunSpec& s)
{
    const Problem p = load(s);
    const auto& b = p.op.bounds();
    StSolveOptions opt;
    opt.omega = s.omega.value_or(2.0 / (b.upper + b.lower));
    opt.xi = s.rho.value_or(std::max(std::abs(1.0 - opt.omega * b.lower), std::abs(1.0 - opt.omega * b.upper)));
    opt.bbar = b.upper * (1.0 + 1e-6);
    opt.eps = s.eps.value_or(1e-6);
    const StSolveResult res = st_solve(p.op, p.rhs, opt);

    const fs::path dir = out_dir(s);
    std::ofstream csv(dir / "st_trace.csv");
    csv << "n,alpha,max_rank,residual_lo,residual_hi\n" << std::setprecision(17);
    for (const auto& r : res.trace) csv << r.n << ',' << r.alpha << ',' << r.max_rank << ',' << r.residual_lo << ',' << r.residual_hi << '\n';
    json rep = {{"problem", p.name},  {"eps", opt.eps},           {"omega", opt.omega},         {"xi", opt.xi},
                {"bbar", opt.bbar},   {"steps", res.trace.size()}, {"error_bound", res.error_bound}, {"final_ranks", res.u.ranks()},
                {"bounds", bounds_json(b)}};
    if (s.oracle) rep["oracle_error"] = oracle_error(p, res.u);
    write_json(dir / "st_report.json", rep);
    std::cout << p.name << ": " << res.trace.size() << " steps, certified error <= " << res.error_bound << '\n';
    return 0;
}

int cmd_compress(const RunSpec& s)
{
    const double eta = s.eps.value_or(0.0);
    if (eta < 0.0) throw InvalidArgument("tolerance must be nonnegative");
    const TensorFile in = read_tensor_file(s.input);
    HTensor out;
    double cert = 0.0;
    double input_norm = 0.0;
    if (in.hierarchical) {
        TruncationReport tr;
        out = recompress(*in.hierarchical, eta, &tr);
        cert = tr.tail;
        input_norm = norm(*in.hierarchical);
    } else {
        const auto tree = make_tree(s.tree, in.dense->order());
        input_norm = in.dense->norm();
        const HTensor full = from_dense(*in.dense, tree, 0.0);
        TruncationReport tr;
        out = recompress(full, eta, &tr);
        // from_dense at tolerance 0 only drops singular values below the relative cutoff
        cert = tr.tail + (to_dense(full).data - in.dense->data).norm();
    }
    const fs::path dir = out_dir(s);
    write_tensor_file((dir / "compressed.ht").string(), out);
    write_json(dir / "compress.json", {{"eta", eta}, {"input_norm", input_norm}, {"certificate", cert}, {"ranks", out.ranks()}});
    std::cout << "ranks " << join(out.ranks()) << ", certified error <= " << cert << '\n';
    return 0;
}

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    return den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

int cmd_bench(const RunSpec& s)
{
    const Problem p = load(s);
    const fs::path dir = out_dir(s);
    std::ofstream csv(dir / "bench.csv");
    csv << "eps,abs_ln_eps,max_rank,support,outer_steps,error_bound,seconds\n" << std::setprecision(17);
    std::vector<double> lx, lr, sx, sy;
    std::vector<Index> ranks;
    json rows = json::array();
    for (int e = 1; e <= 5; ++e) {
        const double eps = std::pow(10.0, -e);
        const SolveResult res = solve(p.op, p.rhs, make_config(p, s, eps));
        const Index mr = res.u.max_rank();
        const Index sup = res.u.support_size();
        csv << eps << ',' << -std::log(eps) << ',' << mr << ',' << sup << ',' << res.report.outer_steps << ',' << res.report.error_bound << ','
            << res.report.seconds << '\n';
        rows.push_back({{"eps", eps}, {"max_rank", mr}, {"support", sup}, {"outer_steps", res.report.outer_steps},
                        {"error_bound", res.report.error_bound}});
        ranks.push_back(mr);
        if (mr > 0) {
            lx.push_back(std::log(-std::log(eps)));
            lr.push_back(std::log(static_cast<double>(mr)));
        }
        if (sup > 0) {
            sx.push_back(std::log(1.0 / eps));
            sy.push_back(std::log(static_cast<double>(sup)));
        }
        std::cout << "eps " << eps << ": max rank " << mr << ", support " << sup << ", bound " << res.report.error_bound << '\n';
    }
    bool monotone = true;
    for (std::size_t i = 1; i < ranks.size(); ++i) monotone = monotone && ranks[i] >= ranks[i - 1];
    const double rank_exp = fit_slope(lx, lr);
    const double supp_exp = fit_slope(sx, sy);
    write_json(dir / "bench.json", {{"problem", p.name},
                                    {"rows", rows},
                                    {"rank_vs_abs_ln_eps_exponent", rank_exp},
                                    {"support_vs_inv_eps_exponent", supp_exp},
                                    {"ranks_monotone", monotone}});
    std::cout << "rank exponent in |ln eps| " << rank_exp << ", support exponent in 1/eps " << supp_exp << ", ranks monotone "
              << (monotone ? "yes" : "no") << '\n';
    return 0;
}

int cmd_info(const RunSpec& s)
{
    const Problem p = load(s);
    const auto& b = p.op.bounds();
    const char* kind = p.op.scaling().kind == ScalingKind::none ? "none"
                       : p.op.scaling().kind == ScalingKind::diagonal ? "diagonal"
                                                                     : "inverse_sqrt_sum";
    const SolveConfig c = default_config(p.op, p.rhs, p.order(), s.eps.value_or(1e-3), s.alpha.value_or(1.0));
    json j = {{"problem", p.name},
              {"order", p.order()},
              {"dims", p.op.dims()},
              {"tree", p.tree->to_string()},
              {"terms", p.op.num_terms()},
              {"scaling", kind},
              {"symmetric", p.op.symmetric()},
              {"bounds", bounds_json(b)},
              {"rhs_norm", norm(p.rhs)},
              {"rhs_ranks", p.rhs.ranks()},
              {"omega", c.omega},
              {"rho", c.rho},
              {"inner_steps", c.inner_steps()},
              {"kappa", {c.kappa1, c.kappa2, c.kappa3}}};
    std::cout << j.dump(2) << '\n';
    if (!s.out.empty()) write_json(out_dir(s) / "info.json", j);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"htsolve: hierarchical Tucker solvers for elliptic operator equations"};
    app.require_subcommand(1);
    RunSpec spec;

    auto common = [&](CLI::App* sc, bool with_problem) {
        if (with_problem) sc->add_option("problem", spec.problem, "problem fixture file")->required()->check(CLI::ExistingFile);
        sc->add_option("--eps", spec.eps, "target accuracy or tolerance");
        sc->add_option("--alpha", spec.alpha, "free parameter in the kappa defaults");
        sc->add_option("--beta1", spec.beta1, "inner recompression factor");
        sc->add_option("--beta2", spec.beta2, "inner coarsening factor");
        sc->add_option("--omega", spec.omega, "step size override");
        sc->add_option("--rho", spec.rho, "contraction bound override");
        sc->add_option("--threads", spec.threads, "worker threads")->check(CLI::PositiveNumber);
        sc->add_flag("--oracle", spec.oracle, "cross-check against the dense solution");
        sc->add_option("--out", spec.out, "output directory");
        sc->add_option("--seed", spec.seed, "fixture randomization seed");
    };
    auto* solve_cmd = app.add_subcommand("solve", "run the adaptive Richardson solver");
    common(solve_cmd, true);
    auto* st_cmd = app.add_subcommand("st-solve", "run the soft-thresholding iteration");
    common(st_cmd, true);
    auto* compress_cmd = app.add_subcommand("compress", "recompress a tensor file");
    compress_cmd->add_option("input", spec.input, "tensor file")->required()->check(CLI::ExistingFile);
    compress_cmd->add_option("--eps", spec.eps, "truncation tolerance");
    compress_cmd->add_option("--tree", spec.tree, "dimension tree for dense input");
    compress_cmd->add_option("--out", spec.out, "output directory");
    compress_cmd->add_option("--threads", spec.threads, "worker threads")->check(CLI::PositiveNumber);
    auto* bench_cmd = app.add_subcommand("bench", "sweep eps from 1e-1 to 1e-5");
    common(bench_cmd, true);
    auto* info_cmd = app.add_subcommand("info", "print operator structure and bounds");
    common(info_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (spec.eps && !(*spec.eps > 0.0) && !compress_cmd->parsed()) throw InvalidArgument("--eps must be positive");
        if (solve_cmd->parsed()) return cmd_solve(spec);
        if (st_cmd->parsed()) return cmd_st_solve(spec);
        if (compress_cmd->parsed()) return cmd_compress(spec);
        if (bench_cmd->parsed()) return cmd_bench(spec);
        if (info_cmd->parsed()) return cmd_info(spec);
    } catch (const ToleranceInfeasible& e) {
        std::cerr << "tolerance infeasible: " << e.what() << '\n';
        return 3;
    } catch (const ContractionViolation& e) {
        std::cerr << "contraction violation: " << e.what() << '\n';
        return 4;
    } catch (const CertificateViolation& e) {
        std::cerr << "certificate violation: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
