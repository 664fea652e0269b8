// Command-line front end: every engine of the library behind one binary with
// JSON/CSV I/O.  Exit codes: 0 success, 1 mathematical failure (undefined
// degree, non-convergent solve, rejected matrix), 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "liouville/io.hpp"
#include "liouville/liouville.hpp"

namespace {

using nlohmann::json;
using namespace liouville;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json read_input(const std::string& path) {
    std::string text;
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
    } else {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open input file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    return json::parse(text);
}

/// Output sink: stdout for "-", otherwise the named file.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path != "-") {
            file_.open(path);
            if (!file_) throw UsageError("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    void flush() { stream().flush(); }

private:
    std::ofstream file_;
};

std::string to_1based(const std::vector<int>& idx) {
    std::vector<int> shifted;
    shifted.reserve(idx.size());
    for (int i : idx) shifted.push_back(i + 1);
    return io::json_int_array(shifted);
}

// ---- check-matrix ----------------------------------------------------------

int run_check_matrix(const std::string& in_path, const std::string& out_path) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j);
    const double zero_tol = j.value("zero_tol", a.default_zero_tol());

    const HypothesisReport rep = full_hypothesis_report(a, zero_tol);
    const BlockDecomposition blocks = decompose_blocks(a, zero_tol);
    const bool irr = is_irreducible(a, zero_tol);

    std::string cond = "null";
    try {
        cond = io::json_number(invert(a).cond_estimate());
    } catch (const SingularMatrixError&) {
    }

    Sink sink(out_path);
    std::ostream& os = sink.stream();
    os << "{\"n\":" << a.n();
    os << ",\"h1_pass\":" << (rep.h1_pass ? "true" : "false");
    os << ",\"h2_pass\":" << (rep.h2_pass ? "true" : "false");
    os << ",\"domination_pass\":" << (rep.domination_pass ? "true" : "false");
    os << ",\"irreducible\":" << (irr ? "true" : "false");
    os << ",\"cond_estimate\":" << cond;
    os << ",\"blocks\":[";
    for (size_t b = 0; b < blocks.blocks.size(); ++b) {
        if (b) os << ",";
        os << to_1based(blocks.blocks[b]);
    }
    os << "],\"failures\":[";
    for (size_t f = 0; f < rep.failures.size(); ++f) {
        if (f) os << ",";
        os << "{\"condition\":\"" << io::json_escape(rep.failures[f].condition) << "\""
           << ",\"indices\":" << to_1based(rep.failures[f].indices)
           << ",\"value\":" << io::json_number(rep.failures[f].value) << "}";
    }
    os << "]}\n";
    return 0;
}

// ---- classify --------------------------------------------------------------

int run_classify(const std::string& in_path, const std::string& out_path) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j.at("A"));
    const auto rho = j.at("rho").get<std::vector<double>>();
    const double rel_tol = j.value("rel_tol", 1e-9);

    const bool want_degree = j.contains("surface");
    RhoPoint p;
    if (want_degree)
        p = degree_for_rho(a, rho, io::parse_surface(j.at("surface")), rel_tol);
    else
        p = classify_rho(a, rho, rel_tol);

    const char* kind = p.kind == RhoPoint::Kind::InteriorO   ? "InteriorO"
                       : p.kind == RhoPoint::Kind::OnGamma   ? "OnGamma"
                                                             : "OutsideDomain";
    Sink sink(out_path);
    std::ostream& os = sink.stream();
    os << "{\"classification\":\"" << kind << "\",\"N\":" << p.level
       << ",\"q\":" << io::json_number(p.q);
    if (want_degree) {
        if (p.degree)
            os << ",\"degree\":" << *p.degree;
        else
            os << ",\"degree\":\"undefined\"";
    }
    os << "}\n";
    return (want_degree && !p.degree) ? 1 : 0;
}

// ---- e-point ----------------------------------------------------------------

int run_e_point(const std::string& in_path, const std::string& out_path) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j.contains("A") ? j.at("A") : j);
    const EPointResult ep = construct_E_point(a);
    const bool member = in_E(a, ep.sigma, 1e-10);

    Sink sink(out_path);
    std::ostream& os = sink.stream();
    os << "{\"sigma\":" << io::json_array(ep.sigma.sigma) << ",\"m\":" << io::json_array(ep.sigma.m)
       << ",\"support\":" << to_1based(ep.support)
       << ",\"full_support\":" << (ep.full_support ? "true" : "false")
       << ",\"in_E\":" << (member ? "true" : "false") << "}\n";
    return 0;
}

// ---- radial -----------------------------------------------------------------

void write_radial_summary(std::ostream& os, const RadialSolution& sol) {
    os << "{\"status\":\"" << (sol.converged() ? "converged" : "divergent") << "\"";
    if (sol.sigma_infinity) {
        os << ",\"sigma\":" << io::json_array(sol.sigma_infinity->sigma)
           << ",\"m\":" << io::json_array(sol.sigma_infinity->m)
           << ",\"pohozaev_residual\":" << io::json_number(sol.pohozaev_residual)
           << ",\"tail_constants\":" << io::json_array(sol.tail_constants);
    } else {
        os << ",\"sigma\":null,\"m\":null,\"pohozaev_residual\":null,\"tail_constants\":null";
    }
    os << ",\"stop_radius\":" << io::json_number(sol.stop_radius)
       << ",\"grid_points\":" << sol.r_grid.size() << "}\n";
}

void write_radial_csv(std::ostream& os, const RadialSolution& sol) {
    const int n = sol.A.n();
    os << "r";
    for (int i = 1; i <= n; ++i) os << ",u_" << i;
    for (int i = 1; i <= n; ++i) os << ",sigma_" << i;
    for (int i = 1; i <= n; ++i) os << ",m_" << i;
    os << "\n";
    for (size_t k = 0; k < sol.r_grid.size(); ++k) {
        os << io::format_double(sol.r_grid[k]);
        for (int i = 0; i < n; ++i) os << "," << io::format_double(sol.u[i][k]);
        for (int i = 0; i < n; ++i) os << "," << io::format_double(sol.sigma_running[i][k]);
        for (int i = 0; i < n; ++i) os << "," << io::format_double(sol.m_running[i][k]);
        os << "\n";
    }
}

int run_radial(const std::string& in_path, const std::string& out_path, const std::string& format) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j.at("A"));
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    const RadialOptions opts =
        j.contains("opts") ? io::parse_radial_options(j.at("opts")) : RadialOptions{};

    const RadialSolution sol = integrate_radial(a, alpha, opts);
    Sink sink(out_path);
    if (format == "csv")
        write_radial_csv(sink.stream(), sol);
    else
        write_radial_summary(sink.stream(), sol);
    return 0;
}

// ---- epsilon-family ---------------------------------------------------------

int run_epsilon_family(const std::string& in_path, const std::string& out_path,
                       const std::string& format) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j.at("A"));
    const int l = j.at("l").get<int>();
    const auto head = j.at("alpha_head").get<std::vector<double>>();
    const double eps = j.at("eps").get<double>();
    const RadialOptions opts =
        j.contains("opts") ? io::parse_radial_options(j.at("opts")) : RadialOptions{};

    const RadialSolution sol = epsilon_family(a, l, head, eps, opts);
    Sink sink(out_path);
    if (format == "csv")
        write_radial_csv(sink.stream(), sol);
    else
        write_radial_summary(sink.stream(), sol);
    return 0;
}

// ---- sweep ------------------------------------------------------------------

std::vector<std::vector<double>> sweep_grid_from_json(const json& j, int n, uint64_t seed) {
    std::vector<std::vector<double>> grid;
    if (j.contains("alphas")) {
        grid = j.at("alphas").get<std::vector<std::vector<double>>>();
        for (const auto& alpha : grid)
            if (static_cast<int>(alpha.size()) != n)
                throw UsageError("each entry of 'alphas' must have length n");
        return grid;
    }
    if (j.contains("grid")) {
        // cartesian product over the first n-1 components, alpha_n = 0
        const auto& g = j.at("grid");
        const auto lo = g.at("lo").get<std::vector<double>>();
        const auto hi = g.at("hi").get<std::vector<double>>();
        const auto count = g.at("count").get<std::vector<int>>();
        const size_t dims = lo.size();
        if (hi.size() != dims || count.size() != dims || static_cast<int>(dims) != n - 1)
            throw UsageError("'grid' axes must all have length n-1");
        std::vector<std::vector<double>> axes(dims);
        for (size_t d = 0; d < dims; ++d) {
            if (count[d] < 1) throw UsageError("'grid' count entries must be >= 1");
            for (int c = 0; c < count[d]; ++c)
                axes[d].push_back(count[d] == 1
                                      ? lo[d]
                                      : lo[d] + (hi[d] - lo[d]) * c / (count[d] - 1));
        }
        std::vector<size_t> idx(dims, 0);
        while (true) {
            std::vector<double> alpha(n, 0.0);
            for (size_t d = 0; d < dims; ++d) alpha[d] = axes[d][idx[d]];
            grid.push_back(std::move(alpha));
            size_t d = 0;
            for (; d < dims; ++d) {
                if (++idx[d] < axes[d].size()) break;
                idx[d] = 0;
            }
            if (d == dims) break;
        }
        return grid;
    }
    if (j.contains("random")) {
        const auto& r = j.at("random");
        const int count = r.at("count").get<int>();
        const double lo = r.at("lo").get<double>();
        const double hi = r.at("hi").get<double>();
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(lo, hi);
        for (int c = 0; c < count; ++c) {
            std::vector<double> alpha(n, 0.0);
            for (int d = 0; d + 1 < n; ++d) alpha[d] = dist(rng);
            grid.push_back(std::move(alpha));
        }
        return grid;
    }
    throw UsageError("sweep input needs one of 'alphas', 'grid', 'random'");
}

const char* sweep_status_name(SweepEntry::Status s) {
    switch (s) {
        case SweepEntry::Status::Converged: return "converged";
        case SweepEntry::Status::Divergent: return "divergent";
        default: return "error";
    }
}

void write_sweep_row(std::ostream& os, const SweepEntry& e, int n, int alpha_cols) {
    for (int d = 0; d < alpha_cols; ++d) {
        if (d) os << ",";
        os << io::format_double(e.alpha[d]);
    }
    for (int i = 0; i < n; ++i)
        os << "," << io::format_double(e.sigma ? e.sigma->sigma[i]
                                               : std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < n; ++i)
        os << "," << io::format_double(e.sigma ? e.sigma->m[i]
                                               : std::numeric_limits<double>::quiet_NaN());
    os << "," << io::format_double(e.pohozaev_residual) << "," << sweep_status_name(e.status)
       << "\n";
}

int run_sweep(const std::string& in_path, const std::string& out_path, const std::string& format,
              int jobs, uint64_t seed) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j.at("A"));
    const int n = a.n();
    const auto grid = sweep_grid_from_json(j, n, seed);
    const RadialOptions opts =
        j.contains("opts") ? io::parse_radial_options(j.at("opts")) : RadialOptions{};

    Sink sink(out_path);
    std::ostream& os = sink.stream();
    // alpha_n is zero under the B-sweep convention and is not emitted; for
    // n = 1 the single height is kept so the map stays visible
    const int alpha_cols = n == 1 ? 1 : n - 1;

    if (format == "csv") {
        for (int d = 1; d <= alpha_cols; ++d) os << (d > 1 ? "," : "") << "alpha_" << d;
        for (int i = 1; i <= n; ++i) os << ",sigma_" << i;
        for (int i = 1; i <= n; ++i) os << ",m_" << i;
        os << ",pohozaev_residual,status\n";
        sink.flush();

        // rows stream out as blocks finish so long sweeps stay inspectable
        const size_t block = static_cast<size_t>(std::max(1, jobs));
        SweepResult all;
        for (size_t start = 0; start < grid.size(); start += block) {
            const size_t stop = std::min(grid.size(), start + block);
            std::vector<std::vector<double>> chunk(grid.begin() + start, grid.begin() + stop);
            SweepResult part = sweep_initial_values(a, chunk, opts, jobs);
            for (auto& e : part.entries) {
                write_sweep_row(os, e, n, alpha_cols);
                all.entries.push_back(std::move(e));
            }
            sink.flush();
        }
        size_t dup = 0;
        for (size_t i = 0; i < all.entries.size(); ++i)
            for (size_t k = i + 1; k < all.entries.size(); ++k) {
                if (!all.entries[i].sigma || !all.entries[k].sigma) continue;
                double d = 0.0;
                for (int c = 0; c < n; ++c)
                    d = std::max(d, std::abs(all.entries[i].sigma->sigma[c] -
                                             all.entries[k].sigma->sigma[c]));
                if (d < 1e-6) ++dup;
            }
        if (dup > 0)
            std::cerr << "sweep: " << dup << " grid point pair(s) map to masses within 1e-6\n";
        return 0;
    }

    const SweepResult res = sweep_initial_values(a, grid, opts, jobs);
    os << "{\"entries\":[";
    for (size_t i = 0; i < res.entries.size(); ++i) {
        const SweepEntry& e = res.entries[i];
        if (i) os << ",";
        os << "{\"alpha\":" << io::json_array(e.alpha) << ",\"status\":\""
           << sweep_status_name(e.status) << "\"";
        if (e.sigma)
            os << ",\"sigma\":" << io::json_array(e.sigma->sigma)
               << ",\"m\":" << io::json_array(e.sigma->m)
               << ",\"pohozaev_residual\":" << io::json_number(e.pohozaev_residual);
        else
            os << ",\"sigma\":null,\"m\":null,\"pohozaev_residual\":null";
        if (!e.error.empty()) os << ",\"error\":\"" << io::json_escape(e.error) << "\"";
        os << "}";
    }
    os << "],\"near_duplicates\":[";
    for (size_t i = 0; i < res.near_duplicates.size(); ++i) {
        if (i) os << ",";
        os << "[" << res.near_duplicates[i].first << "," << res.near_duplicates[i].second << "]";
    }
    os << "]}\n";
    return 0;
}

// ---- mf-solve ---------------------------------------------------------------

int run_mf_solve(const std::string& in_path, const std::string& out_path,
                 const std::string& format) {
    const json j = read_input(in_path);
    const CoefficientMatrix a = io::parse_matrix(j.at("A"));
    const auto rho = j.at("rho").get<std::vector<double>>();
    const TorusGrid grid{j.at("K").get<int>()};

    std::vector<TorusField> h;
    for (const auto& hj : j.at("h")) h.push_back(io::parse_h_profile(hj).evaluate(grid));

    MeanFieldProblem problem(a, rho, std::move(h), grid);
    MeanFieldSolveOptions opts;
    opts.theta = j.value("theta", opts.theta);
    opts.tol = j.value("tol", opts.tol);
    opts.max_iter = j.value("max_iter", opts.max_iter);

    const MeanFieldSolution sol = solve_mean_field(problem, opts);

    Sink sink(out_path);
    std::ostream& os = sink.stream();
    if (format == "csv") {
        os << "# converged=" << (sol.converged ? "true" : "false")
           << " iterations=" << sol.iterations
           << " residual_norm=" << io::format_double(sol.residual_norm)
           << " phi_value=" << io::format_double(sol.phi_value) << "\n";
        os << "x,y";
        for (int i = 1; i <= problem.n(); ++i) os << ",u_" << i;
        os << "\n";
        for (int iy = 0; iy < grid.K; ++iy)
            for (int ix = 0; ix < grid.K; ++ix) {
                os << io::format_double(static_cast<double>(ix) / grid.K) << ","
                   << io::format_double(static_cast<double>(iy) / grid.K);
                for (int i = 0; i < problem.n(); ++i)
                    os << "," << io::format_double(sol.u[i].at(ix, iy));
                os << "\n";
            }
    } else {
        os << "{\"K\":" << grid.K << ",\"converged\":" << (sol.converged ? "true" : "false")
           << ",\"iterations\":" << sol.iterations
           << ",\"residual_norm\":" << io::json_number(sol.residual_norm)
           << ",\"phi_value\":" << io::json_number(sol.phi_value) << ",\"u\":[";
        for (int i = 0; i < problem.n(); ++i) {
            if (i) os << ",";
            os << io::json_array(sol.u[i].values);
        }
        os << "]}\n";
    }
    return sol.converged ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Liouville-system toolkit: matrix hypotheses, energy geometry, "
                 "radial entire solutions and the torus mean-field solver"};
    app.require_subcommand(1);

    struct CommonOpts {
        std::string input = "-";
        std::string output = "-";
        std::string format = "json";
    };

    auto add_io = [](CLI::App* cmd, CommonOpts& o, bool with_format = true) {
        cmd->add_option("-i,--input", o.input, "input JSON file, or - for stdin");
        cmd->add_option("-o,--output", o.output, "output file, or - for stdout");
        if (with_format)
            cmd->add_option("--format", o.format, "output format")
                ->check(CLI::IsMember({"json", "csv"}));
    };

    CommonOpts check_o, classify_o, epoint_o, radial_o, sweep_o, eps_o, mf_o;
    int jobs = 1;
    uint64_t seed = 0;
    int degree_N = 0;
    int degree_chi = 0;
    int degree_genus = 0, degree_holes = 0;

    CLI::App* c_check = app.add_subcommand("check-matrix", "hypothesis report for a matrix");
    add_io(c_check, check_o, false);

    CLI::App* c_classify = app.add_subcommand("classify", "locate rho against the Gamma_N walls");
    add_io(c_classify, classify_o, false);

    CLI::App* c_degree = app.add_subcommand("degree", "Leray-Schauder degree in O_N");
    auto* opt_chi = c_degree->add_option("--chi", degree_chi, "Euler characteristic");
    auto* opt_genus = c_degree->add_option("--genus", degree_genus, "genus of a closed surface");
    auto* opt_holes = c_degree->add_option("--holes", degree_holes, "holes of a planar domain");
    c_degree->add_option("--N", degree_N, "shell index N")->required();

    CLI::App* c_epoint = app.add_subcommand("e-point", "explicit admissible mass vector");
    add_io(c_epoint, epoint_o, false);

    CLI::App* c_radial = app.add_subcommand("radial", "integrate the radial entire-solution system");
    add_io(c_radial, radial_o);

    CLI::App* c_sweep = app.add_subcommand("sweep", "map initial heights to masses");
    add_io(c_sweep, sweep_o);
    c_sweep->add_option("--jobs", jobs, "worker threads for the sweep");
    c_sweep->add_option("--seed", seed, "seed for randomized grids");

    CLI::App* c_eps = app.add_subcommand("epsilon-family", "integrate the eps initial-data family");
    add_io(c_eps, eps_o);

    CLI::App* c_mf = app.add_subcommand("mf-solve", "solve the mean-field system on the torus");
    add_io(c_mf, mf_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (c_check->parsed()) return run_check_matrix(check_o.input, check_o.output);
        if (c_classify->parsed()) return run_classify(classify_o.input, classify_o.output);
        if (c_degree->parsed()) {
            SurfaceSpec surf = SurfaceSpec::closed_surface(0);
            if (*opt_genus)
                surf = SurfaceSpec::closed_surface(degree_genus);
            else if (*opt_holes)
                surf = SurfaceSpec::planar_domain(degree_holes);
            else if (*opt_chi)
                surf = SurfaceSpec{SurfaceSpec::Kind::ClosedSurface, (2 - degree_chi) / 2};
            else
                throw UsageError("degree needs one of --chi, --genus, --holes");
            if (*opt_chi && (2 - degree_chi) % 2 != 0)
                surf = SurfaceSpec{SurfaceSpec::Kind::PlanarDomain, 1 - degree_chi};
            std::cout << degree(surf, degree_N) << "\n";
            return 0;
        }
        if (c_epoint->parsed()) return run_e_point(epoint_o.input, epoint_o.output);
        if (c_radial->parsed()) return run_radial(radial_o.input, radial_o.output, radial_o.format);
        if (c_sweep->parsed())
            return run_sweep(sweep_o.input, sweep_o.output, sweep_o.format, jobs, seed);
        if (c_eps->parsed()) return run_epsilon_family(eps_o.input, eps_o.output, eps_o.format);
        if (c_mf->parsed()) return run_mf_solve(mf_o.input, mf_o.output, mf_o.format);
        std::cerr << "usage error: no subcommand\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
