#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ot/io.hpp"

namespace ot {
namespace cli {

inline std::uint64_t fnv1a64(std::uint64_t h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Loads entity arguments for subcommands. An argument is either a file
/// holding a single entity, a bundle file with exactly one entry of the
/// requested kind, or "file#name" picking a named bundle entry. Raw bytes of
/// every file read are folded into a digest for the run report.
class Inputs {
public:
    explicit Inputs(std::vector<std::string> bundle_paths) : bundle_paths_(std::move(bundle_paths)) {}

    const io::Bundle& context() {
        if (!context_) {
            for (const auto& p : bundle_paths_) digest_file(p);
            context_ = io::load_bundle(bundle_paths_);
        }
        return *context_;
    }

    std::uint64_t digest() const { return digest_; }

    io::MeasureFile measure(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        if (is_bundle(j)) {
            const io::Bundle& b = bundle(path, j);
            const auto& m = pick(b.measures, name, path, "measures");
            io::MeasureFile mf{m.space(), std::nullopt, m};
            for (const auto& [cname, cloud] : b.clouds) {
                if (same_space(cloud.space(), m.space())) {
                    mf.cloud = cloud;
                    break;
                }
            }
            return mf;
        }
        return io::parse_measure(j, context_ptr(), path, "");
    }

    TransportPlan plan(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        if (is_bundle(j)) return pick(bundle(path, j).plans, name, path, "plans");
        return io::parse_plan(j, context_ptr(), path, "");
    }

    MeasureOverMeasures lambda(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        if (is_bundle(j)) return pick(bundle(path, j).lambdas, name, path, "lambdas");
        return io::parse_lambda(j, context_ptr(), path, "");
    }

    SpacePtr space(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        if (is_bundle(j)) return pick(bundle(path, j).spaces, name, path, "spaces");
        if (j.is_object() && j.contains("points")) return io::parse_cloud(j, path, "").space();
        return io::parse_space(j, path, "");
    }

    std::vector<std::vector<std::string>> partition(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        if (is_bundle(j)) return pick(bundle(path, j).partitions, name, path, "partitions");
        return io::parse_partition(j, path, "");
    }

    PointMap point_map(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        if (is_bundle(j)) return pick(bundle(path, j).maps, name, path, "maps");
        return io::parse_point_map(j, context_ptr(), path, "");
    }

    DisintegrationMap disintegration_map(const std::string& arg) {
        auto [path, name] = split(arg);
        const Json j = read(path);
        // Disintegration maps have no bundle section; only entity files.
        if (is_bundle(j)) throw err::load_error(path, "", "expected a disintegration-map file");
        return io::parse_disintegration_map(j, context_ptr(), path, "");
    }

    CostMatrix cost_csv(const std::string& path) {
        digest_file(path);
        return io::read_cost_csv(path);
    }

private:
    static std::pair<std::string, std::optional<std::string>> split(const std::string& arg) {
        const auto pos = arg.rfind('#');
        if (pos == std::string::npos) return {arg, std::nullopt};
        return {arg.substr(0, pos), arg.substr(pos + 1)};
    }

    static bool is_bundle(const Json& j) {
        if (!j.is_object() || j.empty()) return false;
        const auto& names = io::bundle_section_names();
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (std::find(names.begin(), names.end(), it.key()) == names.end()) return false;
        }
        return true;
    }

    void digest_file(const std::string& path) {
        if (digested_.count(path)) return;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw err::load_error(path, "", "cannot open file");
        std::stringstream ss;
        ss << in.rdbuf();
        digest_ = fnv1a64(digest_, ss.str());
        digested_.insert(path);
    }

    Json read(const std::string& path) {
        digest_file(path);
        return io::read_json_file(path);
    }

    const io::Bundle& bundle(const std::string& path, const Json&) {
        auto it = bundles_.find(path);
        if (it == bundles_.end()) it = bundles_.emplace(path, io::load_bundle({path})).first;
        return it->second;
    }

    const io::Bundle* context_ptr() {
        if (bundle_paths_.empty()) return nullptr;
        return &context();
    }

    template <class M>
    static const typename M::mapped_type& pick(const M& section, const std::optional<std::string>& name,
                                               const std::string& path, const char* kind) {
        if (name) {
            auto it = section.find(*name);
            if (it == section.end()) {
                throw err::load_error(path, std::string("/") + kind + "/" + *name, "no such entry");
            }
            return it->second;
        }
        if (section.size() == 1) return section.begin()->second;
        throw err::load_error(path, std::string("/") + kind,
                              section.empty() ? std::string("bundle has no ") + kind
                                              : "ambiguous: pick an entry with file#name");
    }

    std::vector<std::string> bundle_paths_;
    std::optional<io::Bundle> context_;
    std::map<std::string, io::Bundle> bundles_;
    std::set<std::string> digested_;
    std::uint64_t digest_ = 14695981039346656037ULL;
};

struct Options {
    double tol = 1e-9;
    std::uint64_t seed = 0;
    int depth = kDefaultDepthCap;
    long long search_cap = kMkNodeBudget;
};

namespace detail {

inline Json measure_weights_json(const DiscreteMeasure& m) { return io::weights_to_json(m); }

inline Json conditionals_json(const DisintegrationMap& f) {
    Json c = Json::object();
    for (int x : f.domain()) c[f.base()->label(x)] = io::weights_to_json(f.conditional(x));
    return c;
}

inline Json solve_report_json(const SolveReport& rep) {
    Json j;
    j["status"] = rep.status;
    j["cost"] = rep.cost;
    j["cost_exact"] = to_string(rep.cost_exact);
    j["iterations"] = rep.iterations;
    j["plan"] = io::plan_to_json(rep.plan);
    j["row_potentials"] = rep.row_potentials;
    j["col_potentials"] = rep.col_potentials;
    return j;
}

inline int cmd_solve(Inputs& in, const std::string& mu_arg, const std::string& nu_arg,
                     const std::string& cost_arg, double p, std::ostream& out) {
    const io::MeasureFile mu = in.measure(mu_arg);
    const io::MeasureFile nu = in.measure(nu_arg);
    CostMatrix cost = [&] {
        if (!cost_arg.empty()) {
            CostMatrix c = in.cost_csv(cost_arg);
            if (c.rows() != mu.measure.space()->size() || c.cols() != nu.measure.space()->size()) {
                throw err::invalid_argument("cost matrix is " + std::to_string(c.rows()) + "x" +
                                            std::to_string(c.cols()) + " but measures have " +
                                            std::to_string(mu.measure.space()->size()) + " and " +
                                            std::to_string(nu.measure.space()->size()) + " points");
            }
            return c;
        }
        if (!same_space(mu.measure.space(), nu.measure.space())) {
            throw err::invalid_argument("without --cost, --mu and --nu must share one space");
        }
        return cost_from_distance(*mu.measure.space(), p);
    }();
    const SolveReport rep = solve_kantorovich(mu.measure, nu.measure, cost);
    Json j;
    j["command"] = "solve";
    j.update(solve_report_json(rep));
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_wasserstein(Inputs& in, const std::string& mu_arg, const std::string& nu_arg, double p,
                           std::ostream& out) {
    const io::MeasureFile mu = in.measure(mu_arg);
    const io::MeasureFile nu = in.measure(nu_arg);
    const double distance = wasserstein(mu.measure, nu.measure, p);
    const CostMatrix c = cost_from_distance(*mu.measure.space(), p);
    const SolveReport rep = solve_kantorovich(mu.measure, nu.measure, c);
    Json j;
    j["command"] = "wasserstein";
    j["p"] = p;
    j["distance"] = distance;
    j["cost_exact"] = to_string(rep.cost_exact);
    j["plan"] = io::plan_to_json(rep.plan);
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_dual(Inputs& in, const std::string& mu_arg, const std::string& nu_arg, std::ostream& out) {
    const io::MeasureFile mu = in.measure(mu_arg);
    const io::MeasureFile nu = in.measure(nu_arg);
    const W1DualReport rep = w1_dual(mu.measure, nu.measure);
    Json j;
    j["command"] = "dual";
    j["primal"] = rep.primal_value;
    j["dual"] = rep.dual_value;
    j["duality_gap"] = rep.duality_gap;
    j["lipschitz_feasible"] = rep.lip_feasible;
    j["max_lipschitz_violation"] = rep.max_lip_violation;
    Json pot = Json::object();
    const auto& X = *mu.measure.space();
    for (int i = 0; i < X.size(); ++i) pot[X.label(i)] = rep.potential[static_cast<std::size_t>(i)];
    j["potential"] = std::move(pot);
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_disintegrate(Inputs& in, const std::string& plan_arg, const std::string& axis_arg,
                            std::ostream& out) {
    const TransportPlan plan = in.plan(plan_arg);
    Axis axis;
    if (axis_arg == "first") {
        axis = Axis::First;
    } else if (axis_arg == "second") {
        axis = Axis::Second;
    } else {
        throw err::invalid_parameter("--axis must be 'first' or 'second'");
    }
    const auto [marginal, family] = disintegrate(plan, axis);
    Json j;
    j["command"] = "disintegrate";
    j["axis"] = axis_arg;
    j["marginal"] = io::measure_to_json(marginal);
    j["conditionals"] = conditionals_json(family);
    j["target_space"] = io::space_to_json(*family.target());
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_reassemble(Inputs& in, const std::string& marginal_arg, const std::string& map_arg,
                          std::ostream& out) {
    const io::MeasureFile marginal = in.measure(marginal_arg);
    const DisintegrationMap f = in.disintegration_map(map_arg);
    // Rebind the marginal onto the map's base space by label so that a
    // weights-only marginal file lines up with a fully specified map.
    std::vector<Rational> w(static_cast<std::size_t>(f.base()->size()), Rational(0));
    const auto& M = marginal.measure;
    for (int i : M.support()) {
        const std::string& lbl = M.space()->label(i);
        if (!f.base()->has_label(lbl)) {
            throw err::invalid_argument("marginal point '" + lbl + "' is not in the map's base space");
        }
        w[static_cast<std::size_t>(f.base()->index(lbl))] = M.weight(i);
    }
    const DiscreteMeasure mu(f.base(), std::move(w));
    const TransportPlan plan = reassemble(mu, f);
    Json j;
    j["command"] = "reassemble";
    j["plan"] = io::plan_to_json(plan);
    j["cost_preserving"] = true;
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_class(Inputs& in, const std::vector<std::string>& plan_args, std::ostream& out) {
    if (plan_args.size() != 2) throw err::invalid_argument("class compares exactly two plans (--plan twice)");
    const TransportPlan a = in.plan(plan_args[0]);
    const TransportPlan b = in.plan(plan_args[1]);
    const TransportClass ca = transport_class_of(a);
    const TransportClass cb = transport_class_of(b);
    Json j;
    j["command"] = "class";
    j["equivalent"] = equivalent_by_disintegration(a, b);
    j["lambda_a"] = io::lambda_to_json(ca.lambda);
    j["lambda_b"] = io::lambda_to_json(cb.lambda);
    j["consistent_a"] = lambda_consistent(ca.lambda, a.col_marginal());
    j["consistent_b"] = lambda_consistent(cb.lambda, b.col_marginal());
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_mk_class(Inputs& in, const std::string& mu_arg, const std::string& lambda_arg,
                        const std::string& cost_arg, long long search_cap, std::ostream& out) {
    const io::MeasureFile mu = in.measure(mu_arg);
    const MeasureOverMeasures lam = in.lambda(lambda_arg);
    CostMatrix cost = in.cost_csv(cost_arg);
    if (cost.rows() != mu.measure.space()->size() || cost.cols() != lam.target_space()->size()) {
        throw err::invalid_argument("cost matrix shape does not match mu x lambda target");
    }
    MkClassSolution sol =
        solve_mk_in_class(cost, mu.measure, lam, kMkSupportCap, static_cast<long>(search_cap));
    Json j;
    j["command"] = "mk-class";
    j["cost"] = sol.cost;
    j["cost_exact"] = to_string(sol.cost_exact);
    j["relaxation_bound"] = sol.relaxation_bound;
    j["relaxation_exact"] = to_string(sol.relaxation_exact);
    j["nodes_explored"] = sol.nodes_explored;
    j["assignment"] = Json{{"conditionals", conditionals_json(sol.assignment)}};
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_glue(Inputs& in, const std::string& p12_arg, const std::string& p23_arg, std::ostream& out) {
    const TransportPlan p12 = in.plan(p12_arg);
    const TransportPlan p23 = in.plan(p23_arg);
    const Coupling3 g = glue(p12, p23);
    Json j;
    j["command"] = "glue";
    Json entries = Json::array();
    for (int i = 0; i < g.space1()->size(); ++i) {
        for (int k = 0; k < g.space2()->size(); ++k) {
            for (int l = 0; l < g.space3()->size(); ++l) {
                const Rational& m = g.mass(i, k, l);
                if (m == 0) continue;
                Json e;
                e["x"] = g.space1()->label(i);
                e["y"] = g.space2()->label(k);
                e["z"] = g.space3()->label(l);
                e["mass"] = to_string(m);
                entries.push_back(std::move(e));
            }
        }
    }
    j["entries"] = std::move(entries);
    j["plan13"] = io::plan_to_json(g.marginal13());
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_interpolate(Inputs& in, const std::string& mu0_arg, const std::string& mu1_arg, int depth,
                           bool check, const std::string& csv_path, std::ostream& out) {
    io::MeasureFile m0 = in.measure(mu0_arg);
    io::MeasureFile m1 = in.measure(mu1_arg);
    if (!m0.cloud || !m1.cloud) {
        throw err::invalid_argument("interpolate needs measures on Euclidean clouds ('space' with 'points')");
    }
    // Host both endpoints on one cloud: reuse coincident points, append the
    // rest (label collisions across distinct points are rejected).
    PointedEuclideanCloud cloud = *m0.cloud;
    for (int i = 0; i < m1.cloud->size(); ++i) {
        if (cloud.find_point(m1.cloud->point(i))) continue;
        std::string lbl = m1.cloud->label(i);
        if (cloud.space()->has_label(lbl)) {
            throw err::invalid_argument("label '" + lbl + "' names different points in --mu0 and --mu1");
        }
        cloud = cloud.with_point_appended(m1.cloud->point(i), lbl);
    }
    auto rehost = [&](const io::MeasureFile& mf) {
        std::vector<Rational> w(static_cast<std::size_t>(cloud.size()), Rational(0));
        for (int i : mf.measure.support()) {
            const int idx = *cloud.find_point(mf.cloud->point(i));
            w[static_cast<std::size_t>(idx)] += mf.measure.weight(i);
        }
        return DiscreteMeasure(cloud.space(), std::move(w));
    };
    const DiscreteMeasure mu0 = rehost(m0);
    const DiscreteMeasure mu1 = rehost(m1);

    InterpolationConfig cfg;
    cfg.depth_cap = std::max(depth, kDefaultDepthCap);
    const InterpolationPath path = dyadic_interpolation(cloud, mu0, mu1, depth, cfg);

    Json j;
    j["command"] = "interpolate";
    j["depth"] = depth;
    Json frames = Json::array();
    for (int i = 0; i < path.steps(); ++i) {
        Json f;
        f["t"] = to_string(path.times()[static_cast<std::size_t>(i)]);
        f["measure"] = Json{{"weights", io::weights_to_json(path.measure(i))}};
        frames.push_back(std::move(f));
    }
    j["frames"] = std::move(frames);
    j["cloud"] = io::cloud_to_json(path.cloud());
    if (check) {
        const ConstantSpeedReport rep = check_constant_speed(path);
        Json c;
        c["pass"] = rep.pass;
        c["w2_endpoints"] = rep.w2_endpoints;
        c["max_speed_deviation"] = rep.max_speed_deviation;
        c["max_additivity_deviation"] = rep.max_additivity_deviation;
        c["tolerance"] = kConstantSpeedTol;
        c["speed_violations"] = static_cast<long>(rep.speed_violations.size());
        c["additivity_violations"] = static_cast<long>(rep.additivity_violations.size());
        j["constant_speed"] = std::move(c);

        const CostMatrix c2 = cost_from_distance(*path.cloud().space(), 2.0);
        bool cyclical = true;
        long cyc_violations = 0;
        for (int i = 0; i + 1 < path.steps(); ++i) {
            const TransportPlan cpl = path.coupling_plan(i);
            const auto rep2 = check_cyclical_monotonicity(cpl, c2);
            cyclical = cyclical && rep2.pass;
            cyc_violations += static_cast<long>(rep2.violations.size());
        }
        j["cyclically_monotone"] = cyclical;
        j["cyclical_violations"] = cyc_violations;
    }
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw err::invalid_argument("cannot open '" + csv_path + "' for writing");
        csv << "t,label";
        const std::size_t dim = path.cloud().point(0).size();
        for (std::size_t d = 0; d < dim; ++d) csv << ",x" << d;
        csv << ",weight\n";
        for (int i = 0; i < path.steps(); ++i) {
            for (int q : path.measure(i).support()) {
                csv << to_string(path.times()[static_cast<std::size_t>(i)]) << "," << path.cloud().label(q);
                for (double c : path.cloud().point(q)) csv << "," << Json(c).dump();
                csv << "," << to_string(path.measure(i).weight(q)) << "\n";
            }
        }
    }
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_foliation_check(Inputs& in, const std::string& space_arg, const std::string& partition_arg,
                               const std::string& measure_arg, double tol, std::ostream& out) {
    const SpacePtr space = in.space(space_arg);
    const auto classes = in.partition(partition_arg);
    const io::MeasureFile mf = in.measure(measure_arg);
    // Rebind the measure by label so weights-only files work.
    std::vector<Rational> w(static_cast<std::size_t>(space->size()), Rational(0));
    for (int i : mf.measure.support()) {
        const std::string& lbl = mf.measure.space()->label(i);
        if (!space->has_label(lbl)) {
            throw err::invalid_argument("measure point '" + lbl + "' is not in --space");
        }
        w[static_cast<std::size_t>(space->index(lbl))] = mf.measure.weight(i);
    }
    const DiscreteMeasure mu(space, std::move(w));
    const QuotientSpace Q(space, classes);
    const FoliatedSpace F = FoliatedSpace::canonical(space, mu, Q);

    const MetricFoliationReport mf_rep = check_metric_foliation(Q, kMetricFoliationTol);
    const MmfReport mmf_rep = check_mmf(F, tol);

    auto pair_json = [&](const MmfPair& p) {
        Json e;
        e["class_a"] = Q.class_id(p.class_a);
        e["class_b"] = Q.class_id(p.class_b);
        e["w2"] = p.w2;
        e["dstar"] = p.dstar;
        e["deviation"] = std::abs(p.w2 - p.dstar);
        return e;
    };

    Json j;
    j["command"] = "foliation-check";
    Json jm;
    jm["pass"] = mf_rep.pass;
    jm["max_deviation"] = mf_rep.max_deviation;
    Json viols = Json::array();
    for (const auto& v : mf_rep.violations) {
        Json e;
        e["class"] = Q.class_id(v.class_from);
        e["other_class"] = Q.class_id(v.class_to);
        e["point"] = space->label(v.point);
        e["point_to_class"] = v.point_to_class;
        e["class_to_class"] = v.class_to_class;
        viols.push_back(std::move(e));
    }
    jm["violations"] = std::move(viols);
    j["metric_foliation"] = std::move(jm);
    Json jf;
    jf["pass"] = mmf_rep.pass;
    jf["max_deviation"] = mmf_rep.max_deviation;
    jf["tolerance"] = tol;
    Json pairs = Json::array();
    for (const auto& p : mmf_rep.pairs) pairs.push_back(pair_json(p));
    jf["pairs"] = std::move(pairs);
    Json mviols = Json::array();
    for (const auto& v : mmf_rep.violations) mviols.push_back(pair_json(v));
    jf["violations"] = std::move(mviols);
    j["mmf"] = std::move(jf);
    out << j.dump(2) << "\n";
    return 0;
}

inline int cmd_counterexample(int n, std::ostream& out) {
    const CounterexampleFamily fam = build_counterexample(n);
    const std::vector<ModulusRow> rows = continuity_modulus(fam.family);
    out << "y,y_prime,w2,dy\n";
    for (const auto& r : rows) {
        out << Json(r.y).dump() << "," << Json(r.y_prime).dump() << "," << Json(r.w2).dump() << ","
            << Json(r.dy).dump() << "\n";
    }
    return 0;
}

} // namespace detail

/// Entry point shared by the binary and the tests. Parses `args` (without
/// argv[0]), writes the result to `out` and diagnostics to `err_stream`, and
/// returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err_stream) {
    CLI::App app{"exact transport plans, disintegration, and transport classes"};
    app.require_subcommand(1);

    Options opt;
    std::vector<std::string> bundles;
    app.add_option("--tol", opt.tol, "numeric tolerance for checks")->capture_default_str();
    app.add_option("--seed", opt.seed, "seed for randomized checks")->capture_default_str();
    app.add_option("--depth", opt.depth, "dyadic depth cap")->capture_default_str();
    app.add_option("--search-cap", opt.search_cap, "node budget for mk-class search")->capture_default_str();
    app.add_option("--bundle", bundles, "bundle file(s) providing named references");

    std::string mu_arg, nu_arg, cost_arg, plan_arg, axis_arg = "first";
    std::string marginal_arg, map_arg, lambda_arg, p12_arg, p23_arg;
    std::string mu0_arg, mu1_arg, space_arg, partition_arg, measure_arg, csv_arg;
    std::vector<std::string> class_plans;
    double p_exp = 2.0;
    int depth = 3, grid_n = 64;
    bool check = false;

    CLI::App* solve = app.add_subcommand("solve", "minimum-cost plan between two measures");
    solve->add_option("--mu", mu_arg, "source measure file")->required();
    solve->add_option("--nu", nu_arg, "target measure file")->required();
    solve->add_option("--cost", cost_arg, "cost matrix CSV (defaults to distance^p)");
    solve->add_option("--p", p_exp, "exponent for the distance cost")->capture_default_str();

    CLI::App* wass = app.add_subcommand("wasserstein", "Wasserstein distance W_p");
    wass->add_option("--mu", mu_arg, "first measure file")->required();
    wass->add_option("--nu", nu_arg, "second measure file")->required();
    wass->add_option("--p", p_exp, "order p >= 1")->capture_default_str();

    CLI::App* dual = app.add_subcommand("dual", "Kantorovich-Rubinstein dual for W_1");
    dual->add_option("--mu", mu_arg, "first measure file")->required();
    dual->add_option("--nu", nu_arg, "second measure file")->required();

    CLI::App* dis = app.add_subcommand("disintegrate", "conditionals of a plan along an axis");
    dis->add_option("--plan", plan_arg, "plan file")->required();
    dis->add_option("--axis", axis_arg, "first|second")->capture_default_str();

    CLI::App* reas = app.add_subcommand("reassemble", "rebuild a plan from marginal and conditionals");
    reas->add_option("--marginal", marginal_arg, "base measure file")->required();
    reas->add_option("--map", map_arg, "disintegration map file")->required();

    CLI::App* klass = app.add_subcommand("class", "compare the transport classes of two plans");
    klass->add_option("--plan", class_plans, "plan file (give exactly twice)")->expected(-1)->required();

    CLI::App* mk = app.add_subcommand("mk-class", "class-constrained Monge-Kantorovich problem");
    mk->add_option("--mu", mu_arg, "source measure file")->required();
    mk->add_option("--lambda", lambda_arg, "measure-over-measures file")->required();
    mk->add_option("--cost", cost_arg, "cost matrix CSV")->required();

    CLI::App* glue_cmd = app.add_subcommand("glue", "glue two plans along a shared middle marginal");
    glue_cmd->add_option("--plan12", p12_arg, "plan between spaces 1 and 2")->required();
    glue_cmd->add_option("--plan23", p23_arg, "plan between spaces 2 and 3")->required();

    CLI::App* interp_cmd = app.add_subcommand("interpolate", "dyadic displacement interpolation");
    interp_cmd->add_option("--mu0", mu0_arg, "start measure on a point cloud")->required();
    interp_cmd->add_option("--mu1", mu1_arg, "end measure on a point cloud")->required();
    interp_cmd->add_option("--depth", depth, "dyadic depth k")->capture_default_str();
    interp_cmd->add_flag("--check", check, "verify constant speed and cyclical monotonicity");
    interp_cmd->add_option("--csv", csv_arg, "also dump frames to a CSV file");

    CLI::App* fol = app.add_subcommand("foliation-check", "metric foliation and mmf verdicts");
    fol->add_option("--space", space_arg, "base space file")->required();
    fol->add_option("--partition", partition_arg, "partition file")->required();
    fol->add_option("--measure", measure_arg, "measure file")->required();

    CLI::App* cx = app.add_subcommand("counterexample", "continuity-modulus table for the pi(x)=2x family");
    cx->add_option("--n", grid_n, "grid size (>= 4)")->capture_default_str();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err_stream << "usage error: " << e.what() << "\n";
        return 64;
    }

    Inputs in(bundles);
    std::string command = "?";
    int rc = 0;
    try {
        if (app.got_subcommand(solve)) {
            command = "solve";
            rc = detail::cmd_solve(in, mu_arg, nu_arg, cost_arg, p_exp, out);
        } else if (app.got_subcommand(wass)) {
            command = "wasserstein";
            rc = detail::cmd_wasserstein(in, mu_arg, nu_arg, p_exp, out);
        } else if (app.got_subcommand(dual)) {
            command = "dual";
            rc = detail::cmd_dual(in, mu_arg, nu_arg, out);
        } else if (app.got_subcommand(dis)) {
            command = "disintegrate";
            rc = detail::cmd_disintegrate(in, plan_arg, axis_arg, out);
        } else if (app.got_subcommand(reas)) {
            command = "reassemble";
            rc = detail::cmd_reassemble(in, marginal_arg, map_arg, out);
        } else if (app.got_subcommand(klass)) {
            command = "class";
            rc = detail::cmd_class(in, class_plans, out);
        } else if (app.got_subcommand(mk)) {
            command = "mk-class";
            rc = detail::cmd_mk_class(in, mu_arg, lambda_arg, cost_arg, opt.search_cap, out);
        } else if (app.got_subcommand(glue_cmd)) {
            command = "glue";
            rc = detail::cmd_glue(in, p12_arg, p23_arg, out);
        } else if (app.got_subcommand(interp_cmd)) {
            command = "interpolate";
            rc = detail::cmd_interpolate(in, mu0_arg, mu1_arg, depth, check, csv_arg, out);
        } else if (app.got_subcommand(fol)) {
            command = "foliation-check";
            rc = detail::cmd_foliation_check(in, space_arg, partition_arg, measure_arg, opt.tol, out);
        } else if (app.got_subcommand(cx)) {
            command = "counterexample";
            rc = detail::cmd_counterexample(grid_n, out);
        }
    } catch (const Error& e) {
        err_stream << "error (" << e.kind() << "): " << e.what() << "\n";
        return e.exit_code();
    }

    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream digest;
    digest << std::hex << std::setw(16) << std::setfill('0') << in.digest();
    err_stream << "ot " << command << ": ok, inputs fnv1a=" << digest.str() << ", " << ms << " ms\n";
    return rc;
}

} // namespace cli
} // namespace ot
