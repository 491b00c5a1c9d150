#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ot/error.hpp"

namespace ot {

/// A finite metric space with labelled points and an explicit distance matrix.
/// Construction validates the metric axioms: zero diagonal, symmetry and
/// positivity exactly, the triangle inequality within kTriangleTol.
class FiniteMetricSpace {
public:
    static constexpr double kTriangleTol = 1e-12;

    FiniteMetricSpace(std::vector<std::string> labels, const std::vector<std::vector<double>>& dist)
        : labels_(std::move(labels)) {
        const std::size_t n = labels_.size();
        if (n == 0) throw err::invalid_argument("metric space needs at least one point");
        if (dist.size() != n) throw err::invalid_argument("distance matrix row count does not match labels");
        dist_.resize(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            if (dist[i].size() != n) throw err::invalid_argument("distance matrix is not square");
            for (std::size_t j = 0; j < n; ++j) {
                const double d = dist[i][j];
                if (!std::isfinite(d)) throw err::invalid_argument("non-finite distance entry");
                dist_[i * n + j] = d;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, fresh] = index_.emplace(labels_[i], static_cast<int>(i));
            if (!fresh) throw err::invalid_argument("duplicate point label '" + labels_[i] + "'");
        }
        validate_metric();
    }

    int size() const noexcept { return static_cast<int>(labels_.size()); }

    const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    int index(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end()) throw err::not_found("unknown point label '" + label + "'");
        return it->second;
    }

    bool has_label(const std::string& label) const { return index_.count(label) > 0; }

    double dist(int i, int j) const {
        return dist_[static_cast<std::size_t>(i) * labels_.size() + static_cast<std::size_t>(j)];
    }

    /// Structural identity: same labels in the same order, bitwise-equal
    /// distances. Operations that pair two measures require this.
    bool same_geometry(const FiniteMetricSpace& other) const {
        return labels_ == other.labels_ && dist_ == other.dist_;
    }

private:
    void validate_metric() const {
        const int n = size();
        for (int i = 0; i < n; ++i) {
            if (dist(i, i) != 0.0) throw err::invalid_argument("nonzero diagonal in distance matrix");
            for (int j = 0; j < n; ++j) {
                if (dist(i, j) != dist(j, i)) throw err::invalid_argument("asymmetric distance matrix");
                if (i != j && dist(i, j) <= 0.0) {
                    throw err::invalid_argument("non-positive distance between distinct points '" +
                                                labels_[static_cast<std::size_t>(i)] + "', '" +
                                                labels_[static_cast<std::size_t>(j)] + "'");
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) {
                    if (dist(i, j) > dist(i, k) + dist(k, j) + kTriangleTol) {
                        throw err::invalid_argument("triangle inequality violated");
                    }
                }
            }
        }
    }

    std::vector<std::string> labels_;
    std::vector<double> dist_; // row-major n*n
    std::unordered_map<std::string, int> index_;
};

using SpacePtr = std::shared_ptr<const FiniteMetricSpace>;

inline SpacePtr make_space(std::vector<std::string> labels, const std::vector<std::vector<double>>& dist) {
    return std::make_shared<FiniteMetricSpace>(std::move(labels), dist);
}

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
    return a == b || (a && b && a->same_geometry(*b));
}

/// A finite point cloud in R^d. The induced FiniteMetricSpace carries the
/// Euclidean distances; points must be pairwise distinct so the metric is
/// positive. Interpolation grows clouds by appending midpoints.
class PointedEuclideanCloud {
public:
    explicit PointedEuclideanCloud(std::vector<std::vector<double>> points,
                                   std::vector<std::string> labels = {})
        : points_(std::move(points)), labels_(std::move(labels)) {
        if (points_.empty()) throw err::invalid_argument("point cloud is empty");
        dim_ = points_[0].size();
        if (dim_ == 0) throw err::invalid_argument("points need at least one coordinate");
        for (const auto& p : points_) {
            if (p.size() != dim_) throw err::invalid_argument("points have mixed dimensions");
            for (double c : p) {
                if (!std::isfinite(c)) throw err::invalid_argument("non-finite coordinate");
            }
        }
        if (labels_.empty()) {
            labels_.reserve(points_.size());
            for (std::size_t i = 0; i < points_.size(); ++i) labels_.push_back("p" + std::to_string(i));
        } else if (labels_.size() != points_.size()) {
            throw err::invalid_argument("label count does not match point count");
        }
        for (std::size_t i = 0; i < points_.size(); ++i) {
            for (std::size_t j = i + 1; j < points_.size(); ++j) {
                if (points_[i] == points_[j]) {
                    throw err::invalid_argument("duplicate point in cloud at indices " + std::to_string(i) +
                                                ", " + std::to_string(j));
                }
            }
        }
        rebuild_space();
    }

    std::size_t dimension() const noexcept { return dim_; }
    int size() const noexcept { return static_cast<int>(points_.size()); }
    const std::vector<double>& point(int i) const { return points_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::vector<double>>& points() const noexcept { return points_; }
    const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
    const SpacePtr& space() const noexcept { return space_; }

    /// Bitwise point lookup; interpolation relies on this for exact dedup.
    std::optional<int> find_point(const std::vector<double>& coords) const {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i] == coords) return static_cast<int>(i);
        }
        return std::nullopt;
    }

    PointedEuclideanCloud with_point_appended(const std::vector<double>& coords, std::string label) const {
        auto pts = points_;
        auto labs = labels_;
        pts.push_back(coords);
        labs.push_back(std::move(label));
        return PointedEuclideanCloud(std::move(pts), std::move(labs));
    }

    static double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            const double d = a[c] - b[c];
            s += d * d;
        }
        return std::sqrt(s);
    }

private:
    void rebuild_space() {
        const int n = static_cast<int>(points_.size());
        std::vector<std::vector<double>> d(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    euclidean(points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
            }
        }
        space_ = make_space(labels_, d);
    }

    std::vector<std::vector<double>> points_;
    std::vector<std::string> labels_;
    std::size_t dim_ = 0;
    SpacePtr space_;
};

/// Exponent of an l^q product metric; q = infinity is a distinct state, not a
/// sentinel double.
class LqOrder {
public:
    static LqOrder finite(double q) {
        if (!std::isfinite(q) || q < 1.0) throw err::invalid_parameter("l^q order must satisfy q >= 1");
        return LqOrder(q, false);
    }
    static LqOrder infinity() { return LqOrder(0.0, true); }

    bool is_infinity() const noexcept { return inf_; }
    double value() const {
        if (inf_) throw err::invalid_action("q = infinity has no finite value");
        return q_;
    }

    double combine(double a, double b) const {
        if (inf_) return std::max(a, b);
        if (q_ == 1.0) return a + b;
        if (q_ == 2.0) return std::hypot(a, b);
        return std::pow(std::pow(a, q_) + std::pow(b, q_), 1.0 / q_);
    }

private:
    LqOrder(double q, bool inf) : q_(q), inf_(inf) {}
    double q_;
    bool inf_;
};

/// l^q product of two finite metric spaces. Point (a,b) is labelled "(a,b)";
/// the A index varies slowest.
inline FiniteMetricSpace lq_product(const FiniteMetricSpace& A, const FiniteMetricSpace& B, const LqOrder& q) {
    const int m = A.size(), n = B.size();
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            labels.push_back("(" + A.label(i) + "," + B.label(j) + ")");
        }
    }
    const std::size_t N = labels.size();
    std::vector<std::vector<double>> d(N, std::vector<double>(N, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
            for (int k = 0; k < m; ++k) {
                for (int l = 0; l < n; ++l) {
                    const std::size_t r = static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(l);
                    d[p][r] = q.combine(A.dist(i, k), B.dist(j, l));
                }
            }
        }
    }
    return FiniteMetricSpace(std::move(labels), d);
}

inline SpacePtr lq_product(const SpacePtr& A, const SpacePtr& B, const LqOrder& q) {
    return std::make_shared<FiniteMetricSpace>(lq_product(*A, *B, q));
}

/// A partition of a finite metric space together with the induced distance
/// d*(F,F') = min over pairs. d* is symmetric and positive for distinct
/// classes by construction, but the triangle inequality can fail for
/// arbitrary partitions; that status is recorded, not thrown, so diagnostic
/// workflows can inspect non-metric quotients.
class QuotientSpace {
public:
    struct TriangleViolation {
        int a, b, c;
        double lhs, rhs;
    };

    QuotientSpace(SpacePtr base, const std::vector<std::vector<std::string>>& classes) : base_(std::move(base)) {
        if (!base_) throw err::invalid_argument("quotient needs a base space");
        if (classes.empty()) throw err::invalid_argument("partition has no classes");
        std::vector<int> owner(static_cast<std::size_t>(base_->size()), -1);
        members_.resize(classes.size());
        for (std::size_t k = 0; k < classes.size(); ++k) {
            if (classes[k].empty()) throw err::invalid_argument("partition class " + std::to_string(k) + " is empty");
            for (const auto& lab : classes[k]) {
                const int i = base_->index(lab); // throws not-found for unknown labels
                if (owner[static_cast<std::size_t>(i)] != -1) {
                    throw err::invalid_argument("label '" + lab + "' appears in two classes");
                }
                owner[static_cast<std::size_t>(i)] = static_cast<int>(k);
                members_[k].push_back(i);
            }
            std::sort(members_[k].begin(), members_[k].end());
        }
        for (std::size_t i = 0; i < owner.size(); ++i) {
            if (owner[i] == -1) {
                throw err::invalid_argument("label '" + base_->label(static_cast<int>(i)) + "' missing from partition");
            }
        }
        owner_ = std::move(owner);
        build_ids();
        build_dstar();
    }

    const SpacePtr& base() const noexcept { return base_; }
    int class_count() const noexcept { return static_cast<int>(members_.size()); }
    const std::vector<int>& class_members(int k) const { return members_.at(static_cast<std::size_t>(k)); }
    int class_of(int point) const { return owner_.at(static_cast<std::size_t>(point)); }

    /// Canonical class id: sorted member labels joined with '|', in braces.
    const std::string& class_id(int k) const { return ids_.at(static_cast<std::size_t>(k)); }

    int class_index(const std::string& id) const {
        auto it = id_index_.find(id);
        if (it == id_index_.end()) throw err::not_found("unknown class id '" + id + "'");
        return it->second;
    }

    double dstar(int k, int l) const {
        return dstar_[static_cast<std::size_t>(k) * members_.size() + static_cast<std::size_t>(l)];
    }

    /// Distance from a base point to a class: min over members.
    double point_to_class(int point, int k) const {
        double best = std::numeric_limits<double>::infinity();
        for (int b : members_[static_cast<std::size_t>(k)]) best = std::min(best, base_->dist(point, b));
        return best;
    }

    bool dstar_triangle_ok() const noexcept { return triangle_violations_.empty(); }
    const std::vector<TriangleViolation>& triangle_violations() const noexcept { return triangle_violations_; }

private:
    void build_ids() {
        ids_.reserve(members_.size());
        for (std::size_t k = 0; k < members_.size(); ++k) {
            std::vector<std::string> labs;
            labs.reserve(members_[k].size());
            for (int i : members_[k]) labs.push_back(base_->label(i));
            std::sort(labs.begin(), labs.end());
            std::string id = "{";
            for (std::size_t t = 0; t < labs.size(); ++t) {
                if (t) id += '|';
                id += labs[t];
            }
            id += '}';
            ids_.push_back(id);
        }
        for (std::size_t k = 0; k < ids_.size(); ++k) {
            auto [it, fresh] = id_index_.emplace(ids_[k], static_cast<int>(k));
            if (!fresh) throw err::invalid_argument("duplicate class id '" + ids_[k] + "'");
        }
    }

    void build_dstar() {
        const std::size_t K = members_.size();
        dstar_.assign(K * K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t l = k + 1; l < K; ++l) {
                double best = std::numeric_limits<double>::infinity();
                for (int a : members_[k]) {
                    for (int b : members_[l]) best = std::min(best, base_->dist(a, b));
                }
                dstar_[k * K + l] = best;
                dstar_[l * K + k] = best;
            }
        }
        for (std::size_t a = 0; a < K; ++a) {
            for (std::size_t b = 0; b < K; ++b) {
                for (std::size_t c = 0; c < K; ++c) {
                    const double lhs = dstar_[a * K + b];
                    const double rhs = dstar_[a * K + c] + dstar_[c * K + b];
                    if (lhs > rhs + FiniteMetricSpace::kTriangleTol) {
                        triangle_violations_.push_back({static_cast<int>(a), static_cast<int>(b),
                                                        static_cast<int>(c), lhs, rhs});
                    }
                }
            }
        }
    }

    SpacePtr base_;
    std::vector<int> owner_;
    std::vector<std::vector<int>> members_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, int> id_index_;
    std::vector<double> dstar_;
    std::vector<TriangleViolation> triangle_violations_;
};

/// d* between two classes named by id. Unknown ids raise not-found.
inline double quotient_distance(const QuotientSpace& Q, const std::string& id_a, const std::string& id_b) {
    return Q.dstar(Q.class_index(id_a), Q.class_index(id_b));
}

namespace detail {

inline bool is_permutation_vector(const std::vector<int>& p, int n) {
    if (static_cast<int>(p.size()) != n) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int v : p) {
        if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = 1;
    }
    return true;
}

} // namespace detail

/// Quotient by a finite group of isometries given as permutations of point
/// indices (image[i] = g(i)). The set must form a group (identity, closure,
/// inverses) and each permutation must preserve distances exactly; classes
/// are the orbits, ordered by smallest member.
inline QuotientSpace group_quotient(const SpacePtr& X, const std::vector<std::vector<int>>& action) {
    if (!X) throw err::invalid_argument("group quotient needs a base space");
    const int n = X->size();
    if (action.empty()) throw err::invalid_action("group action is empty");
    for (const auto& g : action) {
        if (!detail::is_permutation_vector(g, n)) {
            throw err::invalid_action("group element is not a permutation of the points");
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (X->dist(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]) != X->dist(i, j)) {
                    throw err::invalid_action("group element is not an isometry of the base space");
                }
            }
        }
    }
    // Group axioms on the permutation set itself.
    std::vector<int> identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), 0);
    auto contains = [&](const std::vector<int>& p) {
        return std::find(action.begin(), action.end(), p) != action.end();
    };
    if (!contains(identity)) throw err::invalid_action("group action lacks the identity");
    for (const auto& g : action) {
        std::vector<int> inv(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(g[static_cast<std::size_t>(i)])] = i;
        if (!contains(inv)) throw err::invalid_action("group action is not closed under inverses");
        for (const auto& h : action) {
            std::vector<int> gh(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) gh[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(h[static_cast<std::size_t>(i)])];
            if (!contains(gh)) throw err::invalid_action("group action is not closed under composition");
        }
    }
    // Orbits, each listed by smallest member first.
    std::vector<int> orbit_of(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<std::string>> classes;
    for (int i = 0; i < n; ++i) {
        if (orbit_of[static_cast<std::size_t>(i)] != -1) continue;
        std::vector<int> members;
        for (const auto& g : action) {
            const int img = g[static_cast<std::size_t>(i)];
            if (orbit_of[static_cast<std::size_t>(img)] == -1) {
                orbit_of[static_cast<std::size_t>(img)] = static_cast<int>(classes.size());
                members.push_back(img);
            }
        }
        std::sort(members.begin(), members.end());
        std::vector<std::string> labs;
        labs.reserve(members.size());
        for (int m : members) labs.push_back(X->label(m));
        classes.push_back(std::move(labs));
    }
    return QuotientSpace(X, classes);
}

} // namespace ot
