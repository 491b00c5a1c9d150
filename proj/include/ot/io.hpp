#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ot/foliation.hpp"
#include "ot/interpolation.hpp"
#include "ot/transport_class.hpp"

namespace ot {

using Json = nlohmann::ordered_json;

namespace io {

/// Weights may be written as exact "p/q" strings or as JSON numbers; numbers
/// are ingested exactly (every float is a dyadic rational).
inline Rational json_to_rational(const Json& j, const std::string& file, const std::string& ptr) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number_integer()) return Rational(j.get<long long>());
        if (j.is_number_float()) return rational_from_double(j.get<double>());
    } catch (const Error& e) {
        throw err::load_error(file, ptr, e.what());
    }
    throw err::load_error(file, ptr, "expected a rational ('p/q' string or number)");
}

inline const Json& member(const Json& j, const char* key, const std::string& file, const std::string& ptr) {
    if (!j.is_object()) throw err::load_error(file, ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw err::load_error(file, ptr, std::string("missing field '") + key + "'");
    return *it;
}

inline std::vector<std::string> string_array(const Json& j, const std::string& file, const std::string& ptr) {
    if (!j.is_array()) throw err::load_error(file, ptr, "expected an array of strings");
    std::vector<std::string> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) {
            throw err::load_error(file, ptr + "/" + std::to_string(i), "expected a string");
        }
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

inline std::vector<std::vector<double>> number_matrix(const Json& j, const std::string& file,
                                                      const std::string& ptr) {
    if (!j.is_array()) throw err::load_error(file, ptr, "expected an array of number rows");
    std::vector<std::vector<double>> out;
    out.reserve(j.size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Json& row = j[r];
        const std::string rptr = ptr + "/" + std::to_string(r);
        if (!row.is_array()) throw err::load_error(file, rptr, "expected a number row");
        std::vector<double> vals;
        vals.reserve(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c].is_number()) {
                throw err::load_error(file, rptr + "/" + std::to_string(c), "expected a number");
            }
            vals.push_back(row[c].get<double>());
        }
        out.push_back(std::move(vals));
    }
    return out;
}

/// Labels-only spaces get the discrete (unit) metric; they are the carrier
/// for plumbing operations where only the point identities matter.
inline SpacePtr placeholder_space(std::vector<std::string> labels) {
    const std::size_t n = labels.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    return make_space(std::move(labels), d);
}

inline SpacePtr parse_space(const Json& j, const std::string& file, const std::string& ptr) {
    auto labels = string_array(member(j, "labels", file, ptr), file, ptr + "/labels");
    if (!j.contains("dist")) return placeholder_space(std::move(labels));
    auto dist = number_matrix(j["dist"], file, ptr + "/dist");
    try {
        return make_space(std::move(labels), dist);
    } catch (const Error& e) {
        throw err::load_error(file, ptr, e.what());
    }
}

inline PointedEuclideanCloud parse_cloud(const Json& j, const std::string& file, const std::string& ptr) {
    auto points = number_matrix(member(j, "points", file, ptr), file, ptr + "/points");
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = string_array(j["labels"], file, ptr + "/labels");
    try {
        return PointedEuclideanCloud(std::move(points), std::move(labels));
    } catch (const Error& e) {
        throw err::load_error(file, ptr, e.what());
    }
}

/// Section-indexed entities of one or more bundle files. Partitions stay as
/// raw label classes: they bind to a space at the point of use.
struct Bundle {
    std::map<std::string, SpacePtr> spaces;
    std::map<std::string, PointedEuclideanCloud> clouds;
    std::map<std::string, DiscreteMeasure> measures;
    std::map<std::string, TransportPlan> plans;
    std::map<std::string, std::vector<std::vector<std::string>>> partitions;
    std::map<std::string, PointMap> maps;
    std::map<std::string, MeasureOverMeasures> lambdas;
    Json config = Json::object();
};

/// The "space" field of measures, plans and maps: an inline space, an inline
/// cloud, or (inside a bundle) the name of a spaces/clouds entry.
inline SpacePtr resolve_space_variant(const Json& j, const Bundle* bundle, const std::string& file,
                                      const std::string& ptr) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (bundle) {
            if (auto it = bundle->spaces.find(name); it != bundle->spaces.end()) return it->second;
            if (auto it = bundle->clouds.find(name); it != bundle->clouds.end()) return it->second.space();
        }
        throw err::load_error(file, ptr, "unresolvable space reference '" + name + "'");
    }
    if (j.is_object() && j.contains("points")) return parse_cloud(j, file, ptr).space();
    if (j.is_object() && j.contains("labels")) return parse_space(j, file, ptr);
    throw err::load_error(file, ptr, "expected a space, a cloud, or a reference");
}

/// A parsed measure file: weights keyed by label, plus the space it was
/// declared on (kept as a cloud when it was one, for interpolation).
struct MeasureFile {
    SpacePtr space;
    std::optional<PointedEuclideanCloud> cloud;
    DiscreteMeasure measure;
};

inline std::vector<Rational> parse_weights_on(const Json& jw, const SpacePtr& space, const std::string& file,
                                              const std::string& ptr) {
    if (!jw.is_object()) throw err::load_error(file, ptr, "expected an object label -> weight");
    std::vector<Rational> w(static_cast<std::size_t>(space->size()), Rational(0));
    for (auto it = jw.begin(); it != jw.end(); ++it) {
        const std::string wptr = ptr + "/" + it.key();
        if (!space->has_label(it.key())) {
            throw err::load_error(file, wptr, "weight on unknown point '" + it.key() + "'");
        }
        const Rational r = json_to_rational(it.value(), file, wptr);
        if (r < 0) throw err::load_error(file, wptr, "negative weight");
        w[static_cast<std::size_t>(space->index(it.key()))] = r;
    }
    return w;
}

inline MeasureFile parse_measure(const Json& j, const Bundle* bundle, const std::string& file,
                                 const std::string& ptr) {
    const Json& jw = member(j, "weights", file, ptr);
    if (!jw.is_object()) throw err::load_error(file, ptr + "/weights", "expected an object label -> weight");

    std::optional<PointedEuclideanCloud> cloud;
    SpacePtr space;
    if (j.contains("space")) {
        const Json& js = j["space"];
        if (js.is_object() && js.contains("points")) {
            cloud = parse_cloud(js, file, ptr + "/space");
            space = cloud->space();
        } else {
            space = resolve_space_variant(js, bundle, file, ptr + "/space");
        }
    } else {
        // No space given: carry the weights on a labels-only space in the
        // order the file lists them.
        std::vector<std::string> labels;
        for (auto it = jw.begin(); it != jw.end(); ++it) labels.push_back(it.key());
        space = placeholder_space(std::move(labels));
    }

    std::vector<Rational> w = parse_weights_on(jw, space, file, ptr + "/weights");
    try {
        return MeasureFile{space, std::move(cloud), DiscreteMeasure(space, std::move(w))};
    } catch (const Error& e) {
        throw err::load_error(file, ptr, e.what());
    }
}

inline TransportPlan parse_plan(const Json& j, const Bundle* bundle, const std::string& file,
                                const std::string& ptr) {
    SpacePtr row_space, col_space;
    if (j.contains("row_space")) {
        row_space = resolve_space_variant(j["row_space"], bundle, file, ptr + "/row_space");
    } else {
        row_space = placeholder_space(string_array(member(j, "row_labels", file, ptr), file, ptr + "/row_labels"));
    }
    if (j.contains("col_space")) {
        col_space = resolve_space_variant(j["col_space"], bundle, file, ptr + "/col_space");
    } else {
        col_space = placeholder_space(string_array(member(j, "col_labels", file, ptr), file, ptr + "/col_labels"));
    }
    const Json& jm = member(j, "masses", file, ptr);
    if (!jm.is_array() || static_cast<int>(jm.size()) != row_space->size()) {
        throw err::load_error(file, ptr + "/masses", "expected one mass row per row point");
    }
    std::vector<Rational> masses;
    masses.reserve(static_cast<std::size_t>(row_space->size()) * static_cast<std::size_t>(col_space->size()));
    for (int i = 0; i < row_space->size(); ++i) {
        const Json& row = jm[static_cast<std::size_t>(i)];
        const std::string rptr = ptr + "/masses/" + std::to_string(i);
        if (!row.is_array() || static_cast<int>(row.size()) != col_space->size()) {
            throw err::load_error(file, rptr, "expected one mass per column point");
        }
        for (int c = 0; c < col_space->size(); ++c) {
            const std::string eptr = rptr + "/" + std::to_string(c);
            const Rational m = json_to_rational(row[static_cast<std::size_t>(c)], file, eptr);
            if (m < 0) throw err::load_error(file, eptr, "negative plan mass");
            masses.push_back(m);
        }
    }
    return TransportPlan(row_space, col_space, std::move(masses));
}

inline MeasureOverMeasures parse_lambda(const Json& j, const Bundle* bundle, const std::string& file,
                                        const std::string& ptr) {
    SpacePtr fallback;
    if (j.contains("space")) fallback = resolve_space_variant(j["space"], bundle, file, ptr + "/space");
    const Json& ja = member(j, "atoms", file, ptr);
    if (!ja.is_array() || ja.empty()) throw err::load_error(file, ptr + "/atoms", "expected a nonempty array");
    std::vector<std::pair<DiscreteMeasure, Rational>> atoms;
    for (std::size_t a = 0; a < ja.size(); ++a) {
        const std::string aptr = ptr + "/atoms/" + std::to_string(a);
        const Json& jatom = ja[a];
        const Json& jm = member(jatom, "measure", file, aptr);
        const Rational weight = json_to_rational(member(jatom, "weight", file, aptr), file, aptr + "/weight");
        if (!jm.contains("space") && fallback) {
            // Bind space-less atoms to the file-level space.
            const Json& jw = member(jm, "weights", file, aptr + "/measure");
            std::vector<Rational> w = parse_weights_on(jw, fallback, file, aptr + "/measure/weights");
            atoms.emplace_back(DiscreteMeasure(fallback, std::move(w)), weight);
        } else {
            atoms.emplace_back(parse_measure(jm, bundle, file, aptr + "/measure").measure, weight);
        }
    }
    try {
        return MeasureOverMeasures::from_atoms(atoms);
    } catch (const Error& e) {
        throw err::load_error(file, ptr, e.what());
    }
}

inline PointMap parse_point_map(const Json& j, const Bundle* bundle, const std::string& file,
                                const std::string& ptr) {
    SpacePtr source, target;
    if (j.contains("source_space")) {
        source = resolve_space_variant(j["source_space"], bundle, file, ptr + "/source_space");
    } else {
        source = placeholder_space(
            string_array(member(j, "source_labels", file, ptr), file, ptr + "/source_labels"));
    }
    if (j.contains("target_space")) {
        target = resolve_space_variant(j["target_space"], bundle, file, ptr + "/target_space");
    } else {
        target = placeholder_space(
            string_array(member(j, "target_labels", file, ptr), file, ptr + "/target_labels"));
    }
    const Json& jm = member(j, "map", file, ptr);
    if (!jm.is_object()) throw err::load_error(file, ptr + "/map", "expected an object source -> target");
    std::vector<int> assignment(static_cast<std::size_t>(source->size()), -1);
    for (auto it = jm.begin(); it != jm.end(); ++it) {
        const std::string mptr = ptr + "/map/" + it.key();
        if (!source->has_label(it.key())) throw err::load_error(file, mptr, "unknown source point");
        if (!it.value().is_string() || !target->has_label(it.value().get<std::string>())) {
            throw err::load_error(file, mptr, "unknown target point");
        }
        assignment[static_cast<std::size_t>(source->index(it.key()))] = target->index(it.value().get<std::string>());
    }
    for (int i = 0; i < source->size(); ++i) {
        if (assignment[static_cast<std::size_t>(i)] < 0) {
            throw err::load_error(file, ptr + "/map", "source point '" + source->label(i) + "' has no image");
        }
    }
    return PointMap(source, target, std::move(assignment));
}

inline std::vector<std::vector<std::string>> parse_partition(const Json& j, const std::string& file,
                                                             const std::string& ptr) {
    const Json& jc = member(j, "classes", file, ptr);
    if (!jc.is_array()) throw err::load_error(file, ptr + "/classes", "expected an array of label arrays");
    std::vector<std::vector<std::string>> classes;
    for (std::size_t k = 0; k < jc.size(); ++k) {
        classes.push_back(string_array(jc[k], file, ptr + "/classes/" + std::to_string(k)));
    }
    return classes;
}

inline DisintegrationMap parse_disintegration_map(const Json& j, const Bundle* bundle, const std::string& file,
                                                  const std::string& ptr) {
    SpacePtr base, target;
    if (j.contains("base_space")) {
        base = resolve_space_variant(j["base_space"], bundle, file, ptr + "/base_space");
    } else {
        base = placeholder_space(string_array(member(j, "base_labels", file, ptr), file, ptr + "/base_labels"));
    }
    if (j.contains("target_space")) {
        target = resolve_space_variant(j["target_space"], bundle, file, ptr + "/target_space");
    } else {
        target = placeholder_space(
            string_array(member(j, "target_labels", file, ptr), file, ptr + "/target_labels"));
    }
    const Json& jc = member(j, "conditionals", file, ptr);
    if (!jc.is_object()) throw err::load_error(file, ptr + "/conditionals", "expected an object");
    std::map<int, DiscreteMeasure> conditionals;
    for (auto it = jc.begin(); it != jc.end(); ++it) {
        const std::string cptr = ptr + "/conditionals/" + it.key();
        if (!base->has_label(it.key())) throw err::load_error(file, cptr, "unknown base point");
        if (!it.value().is_object()) throw err::load_error(file, cptr, "expected an object label -> weight");
        std::vector<Rational> w(static_cast<std::size_t>(target->size()), Rational(0));
        for (auto wit = it.value().begin(); wit != it.value().end(); ++wit) {
            const std::string wptr = cptr + "/" + wit.key();
            if (!target->has_label(wit.key())) throw err::load_error(file, wptr, "unknown target point");
            const Rational r = json_to_rational(wit.value(), file, wptr);
            if (r < 0) throw err::load_error(file, wptr, "negative weight");
            w[static_cast<std::size_t>(target->index(wit.key()))] = r;
        }
        conditionals.emplace(base->index(it.key()), DiscreteMeasure(target, std::move(w)));
    }
    try {
        return DisintegrationMap::nonnegative_family(base, target, std::move(conditionals));
    } catch (const Error& e) {
        throw err::load_error(file, ptr, e.what());
    }
}

// ---- serialization ------------------------------------------------------

inline Json space_to_json(const FiniteMetricSpace& X) {
    Json j;
    j["labels"] = X.labels();
    Json rows = Json::array();
    for (int i = 0; i < X.size(); ++i) {
        Json row = Json::array();
        for (int c = 0; c < X.size(); ++c) row.push_back(X.dist(i, c));
        rows.push_back(std::move(row));
    }
    j["dist"] = std::move(rows);
    return j;
}

inline Json cloud_to_json(const PointedEuclideanCloud& C) {
    Json j;
    j["points"] = C.points();
    Json labels = Json::array();
    for (int i = 0; i < C.size(); ++i) labels.push_back(C.label(i));
    j["labels"] = std::move(labels);
    return j;
}

inline Json weights_to_json(const DiscreteMeasure& m) {
    Json w = Json::object();
    for (int i : m.support()) w[m.space()->label(i)] = to_string(m.weight(i));
    return w;
}

inline Json measure_to_json(const DiscreteMeasure& m, bool inline_space = true) {
    Json j;
    if (inline_space) j["space"] = space_to_json(*m.space());
    j["weights"] = weights_to_json(m);
    return j;
}

inline Json plan_to_json(const TransportPlan& plan, bool inline_spaces = true) {
    Json j;
    if (inline_spaces) {
        j["row_space"] = space_to_json(*plan.row_space());
        j["col_space"] = space_to_json(*plan.col_space());
    } else {
        j["row_labels"] = plan.row_space()->labels();
        j["col_labels"] = plan.col_space()->labels();
    }
    Json rows = Json::array();
    for (int i = 0; i < plan.rows(); ++i) {
        Json row = Json::array();
        for (int c = 0; c < plan.cols(); ++c) row.push_back(to_string(plan.mass(i, c)));
        rows.push_back(std::move(row));
    }
    j["masses"] = std::move(rows);
    return j;
}

inline Json lambda_to_json(const MeasureOverMeasures& L) {
    Json j;
    j["space"] = space_to_json(*L.target_space());
    Json atoms = Json::array();
    for (const auto& atom : L.atoms()) {
        Json ja;
        ja["weight"] = to_string(atom.weight);
        ja["measure"] = Json{{"weights", weights_to_json(atom.measure)}};
        atoms.push_back(std::move(ja));
    }
    j["atoms"] = std::move(atoms);
    return j;
}

inline Json point_map_to_json(const PointMap& T) {
    Json j;
    j["source_space"] = space_to_json(*T.source());
    j["target_space"] = space_to_json(*T.target());
    Json m = Json::object();
    for (int i = 0; i < T.source()->size(); ++i) {
        m[T.source()->label(i)] = T.target()->label(T.apply(i));
    }
    j["map"] = std::move(m);
    return j;
}

inline Json partition_to_json(const std::vector<std::vector<std::string>>& classes) {
    Json j;
    j["classes"] = classes;
    return j;
}

inline Json disintegration_map_to_json(const DisintegrationMap& f) {
    Json j;
    j["base_space"] = space_to_json(*f.base());
    j["target_space"] = space_to_json(*f.target());
    Json conditionals = Json::object();
    for (int x : f.domain()) {
        conditionals[f.base()->label(x)] = weights_to_json(f.conditional(x));
    }
    j["conditionals"] = std::move(conditionals);
    return j;
}

// ---- bundles -------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw err::load_error(path, "", "cannot open file");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw err::load_error(path, "", std::string("malformed JSON: ") + e.what());
    }
    return j;
}

inline const std::vector<std::string>& bundle_section_names() {
    static const std::vector<std::string> names{"spaces",     "clouds", "measures", "plans",
                                                "partitions", "maps",   "lambdas",  "config"};
    return names;
}

/// Merges one or more bundle files and resolves references. Sections are
/// optional; unknown sections and duplicate entry names are load errors with
/// precise locations. References resolve against the merged bundle, so they
/// may cross files.
inline Bundle load_bundle(const std::vector<std::string>& paths) {
    struct RawEntry {
        Json j;
        std::string file, ptr;
    };
    std::map<std::string, std::map<std::string, RawEntry>> raw;
    Bundle bundle;
    for (const auto& path : paths) {
        const Json j = read_json_file(path);
        if (!j.is_object()) throw err::load_error(path, "", "bundle must be a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& names = bundle_section_names();
            if (std::find(names.begin(), names.end(), it.key()) == names.end()) {
                throw err::load_error(path, "/" + it.key(), "unknown bundle section");
            }
            if (it.key() == "config") {
                if (!it.value().is_object()) throw err::load_error(path, "/config", "expected an object");
                for (auto cit = it.value().begin(); cit != it.value().end(); ++cit) {
                    bundle.config[cit.key()] = cit.value();
                }
                continue;
            }
            if (!it.value().is_object()) {
                throw err::load_error(path, "/" + it.key(), "expected an object of named entries");
            }
            for (auto eit = it.value().begin(); eit != it.value().end(); ++eit) {
                const std::string ptr = "/" + it.key() + "/" + eit.key();
                auto [slot, fresh] = raw[it.key()].emplace(eit.key(), RawEntry{eit.value(), path, ptr});
                if (!fresh) {
                    throw err::load_error(path, ptr, "duplicate entry '" + eit.key() + "' (first defined in " +
                                                         slot->second.file + ")");
                }
            }
        }
    }
    // Spaces and clouds first; everything else may reference them.
    for (const auto& [name, entry] : raw["spaces"]) {
        bundle.spaces.emplace(name, parse_space(entry.j, entry.file, entry.ptr));
    }
    for (const auto& [name, entry] : raw["clouds"]) {
        bundle.clouds.emplace(name, parse_cloud(entry.j, entry.file, entry.ptr));
    }
    for (const auto& [name, entry] : raw["measures"]) {
        bundle.measures.emplace(name, parse_measure(entry.j, &bundle, entry.file, entry.ptr).measure);
    }
    for (const auto& [name, entry] : raw["plans"]) {
        bundle.plans.emplace(name, parse_plan(entry.j, &bundle, entry.file, entry.ptr));
    }
    for (const auto& [name, entry] : raw["partitions"]) {
        bundle.partitions.emplace(name, parse_partition(entry.j, entry.file, entry.ptr));
    }
    for (const auto& [name, entry] : raw["maps"]) {
        bundle.maps.emplace(name, parse_point_map(entry.j, &bundle, entry.file, entry.ptr));
    }
    for (const auto& [name, entry] : raw["lambdas"]) {
        bundle.lambdas.emplace(name, parse_lambda(entry.j, &bundle, entry.file, entry.ptr));
    }
    return bundle;
}

/// Inverse of load_bundle for the typed sections: entities are written with
/// inline spaces so the output stands alone.
inline Json bundle_to_json(const Bundle& bundle) {
    Json j = Json::object();
    if (!bundle.spaces.empty()) {
        Json s = Json::object();
        for (const auto& [name, space] : bundle.spaces) s[name] = space_to_json(*space);
        j["spaces"] = std::move(s);
    }
    if (!bundle.clouds.empty()) {
        Json s = Json::object();
        for (const auto& [name, cloud] : bundle.clouds) s[name] = cloud_to_json(cloud);
        j["clouds"] = std::move(s);
    }
    if (!bundle.measures.empty()) {
        Json s = Json::object();
        for (const auto& [name, m] : bundle.measures) s[name] = measure_to_json(m);
        j["measures"] = std::move(s);
    }
    if (!bundle.plans.empty()) {
        Json s = Json::object();
        for (const auto& [name, p] : bundle.plans) s[name] = plan_to_json(p);
        j["plans"] = std::move(s);
    }
    if (!bundle.partitions.empty()) {
        Json s = Json::object();
        for (const auto& [name, c] : bundle.partitions) s[name] = partition_to_json(c);
        j["partitions"] = std::move(s);
    }
    if (!bundle.maps.empty()) {
        Json s = Json::object();
        for (const auto& [name, m] : bundle.maps) s[name] = point_map_to_json(m);
        j["maps"] = std::move(s);
    }
    if (!bundle.lambdas.empty()) {
        Json s = Json::object();
        for (const auto& [name, l] : bundle.lambdas) s[name] = lambda_to_json(l);
        j["lambdas"] = std::move(s);
    }
    if (!bundle.config.empty()) j["config"] = bundle.config;
    return j;
}

/// Dense header-free CSV cost matrix, row-major.
inline CostMatrix read_cost_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw err::load_error(path, "", "cannot open file");
    std::vector<double> values;
    int cols = -1, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument("trailing garbage");
                values.push_back(v);
            } catch (const std::exception&) {
                throw err::load_error(path, "row " + std::to_string(rows) + ", column " + std::to_string(c),
                                      "malformed number '" + cell + "'");
            }
            ++c;
        }
        if (cols < 0) {
            cols = c;
        } else if (c != cols) {
            throw err::load_error(path, "row " + std::to_string(rows), "ragged row");
        }
        ++rows;
    }
    if (rows == 0 || cols <= 0) throw err::load_error(path, "", "empty cost matrix");
    try {
        return CostMatrix(rows, cols, std::move(values));
    } catch (const Error& e) {
        throw err::load_error(path, "", e.what());
    }
}

} // namespace io
} // namespace ot
