#include "cli.hpp"

#include "experiments.hpp"

#include "carnot/calculus.hpp"
#include "carnot/capacity.hpp"
#include "carnot/errors.hpp"
#include "carnot/io.hpp"
#include "carnot/lane_emden.hpp"
#include "carnot/parallel.hpp"
#include "carnot/wolff.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#ifndef CARNOT_VERSION
#define CARNOT_VERSION "unknown"
#endif

namespace carnot::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kSchemaVersion = 1;

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quoted(const std::string& s) { return Json(s).dump(); }

// JSON with every float at 17 significant digits; non-finite floats become strings.
void write_json(std::ostream& out, const Json& j, int indent = 0)
{
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out << "{}";
            return;
        }
        out << "{\n";
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            out << (first ? "" : ",\n") << pad << quoted(k) << ": ";
            write_json(out, v, indent + 2);
            first = false;
        }
        out << '\n' << close << '}';
        return;
    }
    case Json::value_t::array: {
        const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
        if (j.empty() || flat) {
            out << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                out << (i ? ", " : "");
                write_json(out, j[i], indent + 2);
            }
            out << ']';
            return;
        }
        out << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            out << (i ? ",\n" : "") << pad;
            write_json(out, j[i], indent + 2);
        }
        out << '\n' << close << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        out << (std::isfinite(v) ? fmt(v) : quoted(fmt(v)));
        return;
    }
    default:
        out << j.dump();
    }
}

struct Common {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string format; // empty until resolved against the subcommand default
    std::string output;
    std::string plot_dir;
};

// A subcommand's payload: a JSON result and optionally a table for CSV output.
struct Report {
    Json result = Json::object();
    std::optional<experiments::Table> table;
    int code = kOk;
};

Json parameters(const CLI::App& sub)
{
    Json p = Json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "output" || name == "emit-plot-data")
            continue;
        if (opt->count() > 0) {
            const auto& res = opt->results();
            if (opt->get_expected_max() > 1 || res.size() > 1)
                p[name] = res;
            else
                p[name] = res.empty() ? std::string{} : res.front();
        } else if (opt->get_expected_max() == 0) {
            p[name] = "false";
        } else {
            p[name] = opt->get_default_str();
        }
    }
    return p;
}

void write_csv_table(std::ostream& out, const experiments::Table& t)
{
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << fmt(row[c]);
        out << '\n';
    }
}

// Flattens scalar fields of a JSON object into "key,value" lines.
void write_csv_scalars(std::ostream& out, const Json& j, const std::string& prefix = {})
{
    for (const auto& [k, v] : j.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) {
            write_csv_scalars(out, v, key);
        } else if (v.is_array()) {
            out << key;
            for (const auto& e : v)
                out << ',' << (e.is_number_float() ? fmt(e.get<double>()) : e.is_string() ? e.get<std::string>() : e.dump());
            out << '\n';
        } else {
            out << key << ',' << (v.is_number_float() ? fmt(v.get<double>()) : v.is_string() ? v.get<std::string>() : v.dump())
                << '\n';
        }
    }
}

void emit(std::ostream& out, const std::string& command, const Common& c, const Json& params, const Report& r)
{
    if (c.format == "json") {
        Json doc;
        doc["schema_version"] = kSchemaVersion;
        doc["tool"] = "carnot";
        doc["version"] = CARNOT_VERSION;
        doc["command"] = command;
        doc["seed"] = c.seed;
        doc["parameters"] = params;
        Json result = r.result;
        if (r.table) {
            result["columns"] = r.table->columns;
            Json rows = Json::array();
            for (const auto& row : r.table->rows)
                rows.push_back(row);
            result["rows"] = rows;
        }
        doc["result"] = result;
        write_json(out, doc);
        out << '\n';
        return;
    }
    out << "# carnot " << CARNOT_VERSION << " schema " << kSchemaVersion << '\n';
    out << "# command " << command << '\n';
    out << "# seed " << c.seed << '\n';
    for (const auto& [k, v] : params.items())
        out << "# param " << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    if (r.table) {
        for (const auto& [k, v] : r.result.items()) {
            std::ostringstream line;
            write_csv_scalars(line, Json{{k, v}});
            std::istringstream lines(line.str());
            for (std::string l; std::getline(lines, l);)
                out << "# " << l << '\n';
        }
        write_csv_table(out, *r.table);
    } else {
        out << "key,value\n";
        write_csv_scalars(out, r.result);
    }
}

void write_series(const Common& c, const std::string& name, std::span<const double> x, std::span<const double> y,
                  const std::string& xlabel, const std::string& ylabel)
{
    if (c.plot_dir.empty())
        return;
    fs::create_directories(c.plot_dir);
    std::ofstream f(fs::path(c.plot_dir) / (name + ".dat"));
    if (!f)
        throw InvalidParams("cannot write plot data into " + c.plot_dir);
    f << "# " << xlabel << ' ' << ylabel << '\n';
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
        f << fmt(x[i]) << ' ' << fmt(y[i]) << '\n';
}

std::vector<double> iota(std::size_t n, double start = 0.0)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = start + static_cast<double>(i);
    return v;
}

double parse_radius(const std::string& s)
{
    if (s == "inf" || s == "infinity")
        return kInfinity;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::logic_error&) {
    }
    throw InvalidParams("expected a number or 'inf', got '" + s + "'");
}

std::pair<int, int> parse_levels(const std::string& s)
{
    const auto dots = s.find("..");
    if (dots == std::string::npos)
        throw InvalidParams("levels must look like m..k, got '" + s + "'");
    try {
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::logic_error&) {
        throw InvalidParams("levels must look like m..k, got '" + s + "'");
    }
}

LatticeKind parse_kind(const std::string& s) { return s == "uniform" ? LatticeKind::uniform : LatticeKind::graded; }

std::shared_ptr<const PointCloud> graded_cover(const GroupSpec& g, const GPoint& center, double radius, double spacing,
                                               LatticeKind kind = LatticeKind::graded)
{
    LatticeOptions lo;
    lo.kind = kind;
    return std::make_shared<const PointCloud>(lattice_cloud(g, center, radius, spacing, lo));
}

// Carrier cloud for a measure file: its own cloud, else a lattice covering its balls.
std::shared_ptr<const PointCloud> carrier_for(const io::MeasureFile& mf, const GroupSpec& g, double spacing)
{
    if (mf.cloud_path)
        return std::make_shared<const PointCloud>(io::load_cloud(*mf.cloud_path, g));
    if (mf.balls.empty())
        return nullptr;
    if (mf.balls.size() == 1)
        return graded_cover(g, mf.balls.front().center, mf.balls.front().radius, spacing * mf.balls.front().radius);
    const double K = std::max(1.0, quasi_triangle_constant(g, 4096, 1));
    double radius = 0.0;
    double smallest = kInfinity;
    for (const auto& b : mf.balls) {
        radius = std::max(radius, K * (hnorm(g, b.center) + b.radius));
        smallest = std::min(smallest, b.radius);
    }
    return graded_cover(g, identity(g), radius, spacing * smallest);
}

Json point_json(std::span<const double> x) { return Json(std::vector<double>(x.begin(), x.end())); }

// ---- group validate ---------------------------------------------------------

struct GroupArgs {
    std::string target;
    std::size_t samples = 1000;
    double tol = 1e-12;
};

Report cmd_group_validate(const GroupArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.target);
    const AxiomReport ax = check_axioms(g, a.samples, c.seed);
    Report r;
    r.result["name"] = g.name();
    r.result["N"] = g.N();
    r.result["M"] = g.M();
    r.result["r"] = g.step();
    r.result["layer_dims"] = std::vector<int>(g.layer_dims().begin(), g.layer_dims().end());
    r.result["jacobi"] = "ok";
    Json axioms;
    axioms["samples"] = ax.samples;
    axioms["associativity"] = ax.associativity;
    axioms["identity"] = ax.identity;
    axioms["inverse"] = ax.inverse;
    axioms["dilation"] = ax.dilation;
    axioms["homogeneity"] = ax.homogeneity;
    r.result["axioms"] = axioms;
    r.result["tolerance"] = a.tol;
    r.result["ok"] = ax.ok(a.tol);
    r.code = ax.ok(a.tol) ? kOk : kReported;
    return r;
}

// ---- dyadic-build -----------------------------------------------------------

struct DyadicArgs {
    std::string group = "H1";
    double radius = 2.0;
    double spacing = 0.1;
    double lambda = 8.0;
    std::string levels = "-1..1";
    std::string kind = "graded";
    std::string cloud_out;
    std::string family_out;
};

Report cmd_dyadic(const DyadicArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.group);
    const auto [m, k] = parse_levels(a.levels);
    const auto cloud = graded_cover(g, identity(g), a.radius, a.spacing, parse_kind(a.kind));
    DyadicOptions opts;
    opts.lambda = a.lambda;
    const DyadicFamily f = build_family(cloud, m, k, opts);
    const SandwichReport& cert = f.certificate();
    const OverlapSummary ov = overlap_summary(f);
    Report r;
    r.result["cloud_size"] = cloud->size();
    r.result["base_level"] = m;
    r.result["top_level"] = k;
    r.result["lambda"] = a.lambda;
    Json levels = Json::array();
    std::vector<double> xs, counts;
    for (int lv = m; lv <= k; ++lv) {
        Json e;
        e["level"] = lv;
        e["side_length"] = f.side_length(lv);
        e["cubes"] = f.level(lv).size();
        e["overlap_max"] = ov.per_level[static_cast<std::size_t>(lv - m)];
        levels.push_back(e);
        xs.push_back(lv);
        counts.push_back(static_cast<double>(f.level(lv).size()));
    }
    r.result["levels"] = levels;
    Json ce;
    ce["partition"] = cert.partition;
    ce["nesting"] = cert.nesting;
    ce["inner"] = cert.inner;
    ce["outer"] = cert.outer;
    ce["inner_violations"] = cert.inner_violations;
    ce["outer_violations"] = cert.outer_violations;
    ce["outer_fill"] = cert.outer_fill;
    r.result["certificate"] = ce;
    r.result["overlap_max"] = ov.max;
    if (!a.cloud_out.empty()) {
        std::ofstream out(a.cloud_out);
        if (!out)
            throw InvalidParams("cannot write " + a.cloud_out);
        io::write_cloud(out, *cloud);
        r.result["cloud_file"] = a.cloud_out;
    }
    if (!a.family_out.empty()) {
        std::ofstream out(a.family_out);
        if (!out)
            throw InvalidParams("cannot write " + a.family_out);
        io::write_family(out, f);
        r.result["family_file"] = a.family_out;
    }
    write_series(c, "dyadic_cubes", xs, counts, "level", "cubes");
    r.code = cert.ok() ? kOk : kReported;
    return r;
}

// ---- wolff ------------------------------------------------------------------

struct WolffArgs {
    std::string group = "H1";
    std::string measure;
    std::string at;
    double alpha = 1.0;
    double p = 2.0;
    std::string R = "1";
    double quad_ratio = 0.75;
    double carrier_spacing = 0.1;
    bool riesz = false;
};

Report cmd_wolff(const WolffArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.group);
    const io::MeasureFile mf = io::load_measure(a.measure, g);
    const auto cloud = carrier_for(mf, g, a.carrier_spacing);
    const Measure mu = io::realize(mf, g, cloud);
    const std::vector<GPoint> pts = io::load_points(a.at, g);
    WolffParams P;
    P.alpha = a.alpha;
    P.p = a.p;
    P.R = parse_radius(a.R);
    P.quad_ratio = a.quad_ratio;
    validate(P);
    const std::vector<double> w = wolff_field(mu, pts, P);
    Report r;
    experiments::Table t;
    t.columns = {"point"};
    for (int k = 1; k <= g.N(); ++k)
        t.columns.push_back("x" + std::to_string(k));
    t.columns.push_back("wolff");
    if (a.riesz)
        t.columns.push_back("riesz");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<double> row{static_cast<double>(i)};
        row.insert(row.end(), pts[i].vec().begin(), pts[i].vec().end());
        row.push_back(w[i]);
        if (a.riesz)
            row.push_back(riesz(mu, pts[i], a.alpha));
        t.rows.push_back(std::move(row));
    }
    r.result["total_mass"] = mu.total_mass();
    r.result["points"] = pts.size();
    r.table = std::move(t);
    write_series(c, "wolff", iota(pts.size()), w, "point", "wolff");
    return r;
}

// ---- equiv ------------------------------------------------------------------

struct EquivArgs {
    std::string group = "H1";
    std::string experiment = "a-chain";
    std::size_t trials = 40;
    double s = 2.0;
    double alpha = 1.0;
    double p = 2.0;
    double q = 3.0;
    bool double_star = false;
    double kappa = 2.0;
};

Report cmd_equiv(const EquivArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.group);
    if (a.trials < 2)
        throw InvalidParams("equiv needs at least two trials");
    Report r;
    std::vector<std::string> ratio_columns;
    bool directions = true;
    if (a.experiment == "a-chain" || a.experiment == "b-chain") {
        const experiments::ChainSetup setup = experiments::chain_setup(g);
        r.table = a.experiment == "a-chain"
                      ? experiments::a_chain_trials(setup, a.trials, c.seed, a.s)
                      : experiments::b_chain_trials(setup, a.trials, c.seed, a.alpha, a.p, a.q, a.double_star);
        ratio_columns = {"r12", "r23", "r31"};
        for (double d : r.table->column("directions"))
            directions = directions && d == 1.0;
        r.result["directions_hold"] = directions;
    } else if (a.experiment == "dze") {
        experiments::DzeOptions o;
        o.alpha = a.alpha;
        o.p = a.p;
        r.table = experiments::dze_trials(g, o, a.trials, c.seed);
        ratio_columns = {"lower_ratio", "upper_ratio"};
    } else if (a.experiment == "energy") {
        experiments::EnergyOptions o;
        o.alpha = a.alpha;
        o.p = a.p;
        o.q = a.q;
        r.table = experiments::energy_trials(g, o, a.trials, c.seed);
        ratio_columns = {"ratio_a", "ratio_b"};
    } else {
        throw InvalidParams("unknown experiment '" + a.experiment + "'");
    }
    const std::size_t half = r.table->rows.size() / 2;
    Json summary = Json::object();
    std::size_t violations = 0;
    for (const std::string& col : ratio_columns) {
        const std::vector<double> all = r.table->column(col);
        const experiments::Interval band = experiments::calibrate(r.table->column(col, 0, half), a.kappa);
        const std::vector<double> held = r.table->column(col, half, r.table->rows.size());
        const std::size_t v = experiments::count_outside(band, held);
        violations += v;
        Json s;
        s["min"] = experiments::quantile(all, 0.0);
        s["q05"] = experiments::quantile(all, 0.05);
        s["median"] = experiments::quantile(all, 0.5);
        s["q95"] = experiments::quantile(all, 0.95);
        s["max"] = experiments::quantile(all, 1.0);
        s["calibrated_lo"] = band.lo;
        s["calibrated_hi"] = band.hi;
        s["held_out_violations"] = v;
        summary[col] = s;
        write_series(c, "equiv_" + col, r.table->column("trial"), all, "trial", col);
    }
    r.result["experiment"] = a.experiment;
    r.result["kappa"] = a.kappa;
    r.result["summary"] = summary;
    r.result["held_out_violations"] = violations;
    r.code = directions && violations == 0 ? kOk : kReported;
    return r;
}

// ---- capacity / removability -----------------------------------------------

struct CapacityArgs {
    std::string group = "H1";
    std::string set;
    double alpha = 1.0;
    double s = 2.0;
    double spacing = 0.25;
    double core_factor = 2.0;
    double domain_factor = 8.0;
    std::size_t max_iter = 500;
    double tol = 1e-8;
};

Report cmd_capacity(const CapacityArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.group);
    const CompactSet E = io::load_set(a.set, g);
    CapacityParams P{a.alpha, a.s};
    validate(P);
    CapacityCloudOptions co;
    co.spacing = a.spacing;
    co.core_factor = a.core_factor;
    co.domain_factor = a.domain_factor;
    const PointCloud cloud = capacity_cloud(E, co);
    const Degeneracy d = degeneracy_verdict(P, g.M());
    Report r;
    r.result["degeneracy"] = std::string(to_string(d));
    r.result["cloud_size"] = cloud.size();
    if (d == Degeneracy::identically_zero) {
        const std::vector<double> w(E.size(), 1.0 / static_cast<double>(E.size()));
        r.result["value"] = 0.0;
        r.result["finite_domain_objective"] = dual_objective(E, w, P, cloud, false);
        return r;
    }
    CapacityOptions opts;
    opts.max_iter = a.max_iter;
    opts.tol = a.tol;
    const CapacityResult res = capacity_lower(E, P, cloud, opts);
    r.result["value"] = res.value;
    r.result["iterations"] = res.iterations;
    r.result["converged"] = res.converged;
    r.result["tail_fraction"] = res.tail_fraction;
    Json witness = Json::array();
    for (std::size_t i = 0; i < res.witness.size(); ++i) {
        Json e;
        e["point"] = point_json(res.witness.point(i));
        e["mass"] = res.witness.mass(i);
        witness.push_back(e);
    }
    r.result["witness"] = witness;
    write_series(c, "capacity_trace", iota(res.trace.size(), 1.0), res.trace, "iteration", "objective");
    return r;
}

struct RemovabilityArgs {
    std::string group;
    int M = 0;
    double p = 2.0;
    double q = 3.0;
};

Report cmd_removability(const RemovabilityArgs& a, const Common&)
{
    int M = a.M;
    if (!a.group.empty())
        M = io::resolve_group(a.group).M();
    if (M <= 0)
        throw InvalidParams("give --M or --group");
    Report r;
    r.result["verdict"] = std::string(to_string(removability_verdict(a.p, a.q, M)));
    r.result["M"] = M;
    r.result["exponent"] = a.p * a.q / (a.q - a.p + 1.0);
    return r;
}

// ---- solve / liouville ------------------------------------------------------

struct SolveArgs {
    std::string group = "H1";
    std::string measure;
    double p = 2.0;
    double q = 2.0;
    double R = 1.0;
    double A = 1.0;
    std::size_t max_iter = 500;
    double tol = 1e-6;
    double carrier_spacing = 0.2;
};

Report cmd_solve(const SolveArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.group);
    const io::MeasureFile mf = io::load_measure(a.measure, g);
    auto cloud = carrier_for(mf, g, a.carrier_spacing);
    if (!cloud) {
        // Purely atomic data: a lattice on the ball of radius R about the identity.
        cloud = graded_cover(g, identity(g), a.R, a.carrier_spacing * a.R);
    }
    const Measure omega = io::realize(mf, g, cloud);
    SolveConfig cfg;
    cfg.A = a.A;
    cfg.p = a.p;
    cfg.q = a.q;
    cfg.R = a.R;
    cfg.max_iter = a.max_iter;
    cfg.tol_rel = a.tol;
    const PicardResult res = picard_solve(omega, cfg, cloud);
    const IterDiagnostics& d = res.diagnostics;
    Report r;
    r.result["verdict"] = std::string(to_string(d.verdict));
    r.result["iterations"] = d.sup_norm.size();
    r.result["cloud_size"] = cloud->size();
    r.result["sup_norms"] = d.sup_norm;
    r.result["increments"] = d.increment;
    r.result["monotone"] = d.monotone;
    r.result["monotone_violations"] = d.monotone_violations;
    if (!d.note.empty())
        r.result["note"] = d.note;
    Json kb;
    kb["kappa"] = res.kappa;
    kb["max_u_over_w"] = res.max_u_over_w;
    kb["upper_bound_holds"] = res.upper_bound_holds;
    kb["lower_bound_holds"] = res.lower_bound_holds;
    r.result["kappa_bound"] = kb;
    r.result["cond_c0"] = cond_c0(a.A, a.p, a.q);
    write_series(c, "solve_sup", iota(d.sup_norm.size(), 1.0), d.sup_norm, "iteration", "sup_u");
    r.code = d.verdict == SolveVerdict::converged ? kOk : kReported;
    return r;
}

struct LiouvilleArgs {
    std::string group = "H1";
    double p = 2.0;
    double q = 2.0;
    std::vector<double> schedule{2, 4, 8, 16, 32, 64};
    double core_radius = 2.0;
    double spacing = 0.3;
    std::size_t eval_points = 300;
    double stable_tol = 0.05;
};

Report cmd_liouville(const LiouvilleArgs& a, const Common& c)
{
    const GroupSpec g = io::resolve_group(a.group);
    LiouvilleConfig cfg;
    cfg.p = a.p;
    cfg.q = a.q;
    cfg.R_schedule = a.schedule;
    cfg.core_radius = a.core_radius;
    cfg.spacing = a.spacing;
    cfg.eval_points = a.eval_points;
    cfg.stable_tol = a.stable_tol;
    const LiouvilleResult res = liouville_probe(g, cfg);
    Report r;
    r.result["verdict"] = std::string(to_string(res.verdict));
    r.result["threshold"] = liouville_threshold(g.M(), a.p);
    r.result["c0"] = res.c0;
    r.result["R"] = res.R;
    r.result["ratio"] = res.ratio;
    r.result["cloud_size"] = res.cloud_size;
    write_series(c, "liouville", res.R, res.ratio, "R", "ratio");
    return r;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--seed", c.seed, "Seed for every pseudo-random choice");
    sub->add_option("--threads", c.threads, "Worker cap (default: CARNOT_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--output", c.output, "Write results to this file instead of stdout");
    sub->add_option("--emit-plot-data", c.plot_dir, "Directory for x/y series files");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Nonlinear potential theory on Carnot groups", "carnot"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", CARNOT_VERSION);

    Common common;
    std::map<const CLI::App*, std::string> default_format;
    std::function<Report()> action;
    std::string command;
    CLI::App* chosen = nullptr;

    auto bind = [&](CLI::App* sub, auto& holder, auto fn) {
        sub->callback([&, sub, fn]() {
            chosen = sub;
            action = [&holder, &common, fn]() { return fn(holder, common); };
        });
    };

    GroupArgs ga;
    CLI::App* group = app.add_subcommand("group", "Group specifications");
    group->require_subcommand(1);
    CLI::App* validate_cmd = group->add_subcommand("validate", "Print N, M, r and run the axiom suite");
    validate_cmd->add_option("spec", ga.target, "Builtin name (H1, Engel, R3, ...) or spec file")->required();
    validate_cmd->add_option("--samples", ga.samples, "Random samples per axiom");
    validate_cmd->add_option("--tol", ga.tol, "Largest accepted error");
    add_common(validate_cmd, common);
    default_format[validate_cmd] = "json";
    bind(validate_cmd, ga, cmd_group_validate);

    DyadicArgs da;
    CLI::App* dyadic = app.add_subcommand("dyadic-build", "Build a lattice cloud and its dyadic cube family");
    dyadic->add_option("--group", da.group, "Group name or spec file");
    dyadic->add_option("--radius", da.radius, "Cloud radius")->check(CLI::PositiveNumber);
    dyadic->add_option("--spacing", da.spacing, "Lattice spacing")->check(CLI::PositiveNumber);
    dyadic->add_option("--lambda", da.lambda, "Scale ratio between levels");
    dyadic->add_option("--levels", da.levels, "Level range m..k");
    dyadic->add_option("--kind", da.kind, "Lattice kind")->check(CLI::IsMember({"graded", "uniform"}));
    dyadic->add_option("--cloud-out", da.cloud_out, "Write the cloud file here");
    dyadic->add_option("--family-out", da.family_out, "Write the family file here");
    add_common(dyadic, common);
    default_format[dyadic] = "json";
    bind(dyadic, da, cmd_dyadic);

    WolffArgs wa;
    CLI::App* wolff_cmd = app.add_subcommand("wolff", "Evaluate the Wolff potential of a measure");
    wolff_cmd->add_option("--group", wa.group, "Group name or spec file");
    wolff_cmd->add_option("--measure", wa.measure, "Measure file")->required();
    wolff_cmd->add_option("--at", wa.at, "Point file")->required();
    wolff_cmd->add_option("--alpha", wa.alpha, "alpha > 0");
    wolff_cmd->add_option("--p", wa.p, "p > 1");
    wolff_cmd->add_option("--R", wa.R, "Truncation radius or inf");
    wolff_cmd->add_option("--quad-ratio", wa.quad_ratio, "Geometric node ratio");
    wolff_cmd->add_option("--carrier-spacing", wa.carrier_spacing, "Lattice spacing for ball densities, per unit radius");
    wolff_cmd->add_flag("--riesz", wa.riesz, "Also report I_alpha");
    add_common(wolff_cmd, common);
    default_format[wolff_cmd] = "csv";
    bind(wolff_cmd, wa, cmd_wolff);

    EquivArgs ea;
    CLI::App* equiv = app.add_subcommand("equiv", "Randomized discrete/continuous equivalence experiments");
    equiv->add_option("--group", ea.group, "Group name or spec file");
    equiv->add_option("--experiment", ea.experiment, "Experiment")
        ->check(CLI::IsMember({"a-chain", "b-chain", "dze", "energy"}));
    equiv->add_option("--trials", ea.trials, "Number of random instances");
    equiv->add_option("--s", ea.s, "Exponent of the A-functionals");
    equiv->add_option("--alpha", ea.alpha, "alpha");
    equiv->add_option("--p", ea.p, "p");
    equiv->add_option("--q", ea.q, "q");
    equiv->add_flag("--double-star", ea.double_star, "Use mu(Q**) in the B-functionals");
    equiv->add_option("--kappa", ea.kappa, "Widening factor of the calibrated ratio band");
    add_common(equiv, common);
    default_format[equiv] = "csv";
    bind(equiv, ea, cmd_equiv);

    CapacityArgs ca;
    CLI::App* capacity = app.add_subcommand("capacity", "Dual lower bound for the Riesz capacity of a set");
    capacity->add_option("--group", ca.group, "Group name or spec file");
    capacity->add_option("--set", ca.set, "Set file")->required();
    capacity->add_option("--alpha", ca.alpha, "alpha > 0");
    capacity->add_option("--s", ca.s, "s > 1");
    capacity->add_option("--spacing", ca.spacing, "Core lattice spacing per unit set radius");
    capacity->add_option("--core-factor", ca.core_factor, "Core radius per set radius");
    capacity->add_option("--domain-factor", ca.domain_factor, "Quadrature radius per set radius");
    capacity->add_option("--max-iter", ca.max_iter, "Ascent iteration cap");
    capacity->add_option("--tol", ca.tol, "Relative objective change that stops the ascent");
    add_common(capacity, common);
    default_format[capacity] = "json";
    bind(capacity, ca, cmd_capacity);

    RemovabilityArgs ra;
    CLI::App* removability = app.add_subcommand("removability", "Whether points are removable singularities");
    removability->add_option("--p", ra.p, "p");
    removability->add_option("--q", ra.q, "q");
    removability->add_option("--M", ra.M, "Homogeneous dimension");
    removability->add_option("--group", ra.group, "Group name or spec file, in place of --M");
    add_common(removability, common);
    default_format[removability] = "json";
    bind(removability, ra, cmd_removability);

    SolveArgs sa;
    CLI::App* solve = app.add_subcommand("solve", "Picard iteration for the Lane-Emden integral equation");
    solve->add_option("--group", sa.group, "Group name or spec file");
    solve->add_option("--measure", sa.measure, "Data measure file")->required();
    solve->add_option("--p", sa.p, "p");
    solve->add_option("--q", sa.q, "q");
    solve->add_option("--R", sa.R, "Domain radius; potentials use 2R");
    solve->add_option("--A", sa.A, "Constant A");
    solve->add_option("--max-iter", sa.max_iter, "Iteration cap");
    solve->add_option("--tol", sa.tol, "Relative increment that counts as converged");
    solve->add_option("--carrier-spacing", sa.carrier_spacing, "Lattice spacing for ball densities, per unit radius");
    add_common(solve, common);
    default_format[solve] = "json";
    bind(solve, sa, cmd_solve);

    LiouvilleArgs la;
    CLI::App* liouville = app.add_subcommand("liouville", "Growth of the (v)-ratio over expanding balls");
    liouville->add_option("--group", la.group, "Group name or spec file");
    liouville->add_option("--p", la.p, "p");
    liouville->add_option("--q", la.q, "q");
    liouville->add_option("--R-schedule", la.schedule, "Comma-separated radii")->delimiter(',');
    liouville->add_option("--core-radius", la.core_radius, "Core lattice radius");
    liouville->add_option("--spacing", la.spacing, "Core lattice spacing");
    liouville->add_option("--eval-points", la.eval_points, "Evaluation points per radius");
    liouville->add_option("--stable-tol", la.stable_tol, "Relative change that counts as stable");
    add_common(liouville, common);
    default_format[liouville] = "json";
    bind(liouville, la, cmd_liouville);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* at = &app;
        while (!at->get_subcommands().empty())
            at = at->get_subcommands().back();
        out << at->help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << CARNOT_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        const CLI::App* at = &app;
        while (!at->get_subcommands().empty())
            at = at->get_subcommands().back();
        err << "error: " << e.what() << "\n\n" << at->help();
        return kInvalid;
    }
    if (!action) {
        err << app.help();
        return kInvalid;
    }

    command = chosen->get_parent() != &app ? chosen->get_parent()->get_name() + " " + chosen->get_name()
                                          : chosen->get_name();
    if (common.format.empty())
        common.format = default_format.at(chosen);
    if (common.threads > 0)
        set_max_threads(common.threads);
    try {
        const Report report = action();
        Json params = parameters(*chosen);
        params["out"] = common.format;
        if (common.output.empty()) {
            emit(out, command, common, params, report);
        } else {
            std::ofstream f(common.output);
            if (!f)
                throw InvalidParams("cannot write " + common.output);
            emit(f, command, common, params, report);
        }
        return report.code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
}

} // namespace carnot::cli
