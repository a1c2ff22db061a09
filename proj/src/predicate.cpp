#include "nnrep/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nnrep {

using nlohmann::json;

namespace {

// Coefficient vectors may be shorter than the vector they apply to; the
// missing trailing coefficients are zero.
double dot_prefix(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& v,
                  const char* what) {
    if (coeffs.size() == 0) return 0.0;
    if (coeffs.size() > v.size())
        throw DimensionError(std::string("constraint coefficient size exceeds ") + what +
                             " dimension");
    return coeffs.dot(v.head(coeffs.size()));
}

bool same_constraints(const std::vector<AffineConstraint>& a,
                      const std::vector<AffineConstraint>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].rhs != b[i].rhs) return false;
        if (a[i].a_x.size() != b[i].a_x.size() || a[i].a_x != b[i].a_x) return false;
        if (a[i].a_y.size() != b[i].a_y.size() || a[i].a_y != b[i].a_y) return false;
    }
    return true;
}

void validate_constraint(const AffineConstraint& c, bool is_guard) {
    if (!c.a_x.allFinite() || !c.a_y.allFinite() || !std::isfinite(c.rhs))
        throw SchemaError("affine constraint has non-finite coefficients");
    if (c.a_x.size() == 0 && c.a_y.size() == 0)
        throw SchemaError("affine constraint has no coefficients");
    const bool any_x = c.a_x.size() > 0 && c.a_x.cwiseAbs().maxCoeff() > 0.0;
    const bool any_y = c.a_y.size() > 0 && c.a_y.cwiseAbs().maxCoeff() > 0.0;
    if (!any_x && !any_y) throw SchemaError("affine constraint has all-zero coefficients");
    if (is_guard && any_y) throw SchemaError("guard constraints may reference only the input");
}

} // namespace

double AffineConstraint::lhs(const Eigen::VectorXd& x0, const Eigen::VectorXd& y) const {
    return dot_prefix(a_x, x0, "input") + dot_prefix(a_y, y, "output");
}

double AffineConstraint::positive_slack(const Eigen::VectorXd& x0,
                                        const Eigen::VectorXd& y) const {
    return std::max(0.0, lhs(x0, y) - rhs);
}

Predicate::Predicate(std::vector<Disjunct> disjuncts) : disjuncts_(std::move(disjuncts)) {
    if (disjuncts_.empty()) throw SchemaError("predicate must have at least one disjunct");
    for (const Disjunct& d : disjuncts_) {
        for (const AffineConstraint& g : d.guard) validate_constraint(g, true);
        for (const AffineConstraint& b : d.body) validate_constraint(b, false);
        if (d.body.empty()) throw SchemaError("disjunct must have a non-empty body");
    }
    for (int i = 0; i < static_cast<int>(disjuncts_.size()); ++i) {
        bool placed = false;
        for (std::vector<int>& group : groups_) {
            if (same_constraints(disjuncts_[static_cast<size_t>(group.front())].guard,
                                 disjuncts_[static_cast<size_t>(i)].guard)) {
                group.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) groups_.push_back({i});
    }
}

bool Predicate::guard_active(int group, const Eigen::VectorXd& x0, double eps) const {
    static const Eigen::VectorXd kNoY;
    const Disjunct& rep = disjuncts_[static_cast<size_t>(groups_[static_cast<size_t>(group)].front())];
    for (const AffineConstraint& g : rep.guard)
        if (!g.holds(x0, kNoY, eps)) return false;
    return true;
}

Predicate make_global_bound(const Eigen::VectorXd& y_min, const Eigen::VectorXd& y_max) {
    if (y_min.size() != y_max.size())
        throw DimensionError("make_global_bound: bound vectors differ in size");
    for (Eigen::Index k = 0; k < y_min.size(); ++k)
        if (y_min[k] > y_max[k]) throw SchemaError("make_global_bound: inverted bounds");
    Disjunct d;
    for (Eigen::Index k = 0; k < y_min.size(); ++k) {
        Eigen::VectorXd up = Eigen::VectorXd::Zero(y_min.size());
        up[k] = 1.0;
        d.body.push_back({Eigen::VectorXd(), up, y_max[k]});       // y_k <= y_max
        d.body.push_back({Eigen::VectorXd(), -up, -y_min[k]});     // -y_k <= -y_min
    }
    return Predicate({d});
}

Predicate make_global_bound(double y_min, double y_max) {
    Eigen::VectorXd lo(1), hi(1);
    lo << y_min;
    hi << y_max;
    return make_global_bound(lo, hi);
}

Predicate make_rate_bound(int prev_output_index, double delta_max) {
    if (prev_output_index < 0) throw SchemaError("make_rate_bound: invalid index");
    if (!(delta_max > 0.0)) throw SchemaError("make_rate_bound: delta_max must be > 0");
    const int n = prev_output_index + 1;
    Eigen::VectorXd ex = Eigen::VectorXd::Zero(n);
    ex[prev_output_index] = 1.0;
    Eigen::VectorXd ey(1);
    ey << 1.0;
    Disjunct d;
    d.body.push_back({-ex, ey, delta_max});  // y - x0[idx] <= delta
    d.body.push_back({ex, -ey, delta_max});  // x0[idx] - y <= delta
    return Predicate({d});
}

Predicate make_avoid_box(int guard_index, double guard_lo, double guard_hi, double y_low,
                         double y_high) {
    if (guard_index < 0) throw SchemaError("make_avoid_box: invalid guard index");
    if (guard_lo > guard_hi || !(y_low < y_high))
        throw SchemaError("make_avoid_box: malformed interval");
    const int n = guard_index + 1;
    Eigen::VectorXd eg = Eigen::VectorXd::Zero(n);
    eg[guard_index] = 1.0;
    std::vector<AffineConstraint> guard;
    guard.push_back({eg, Eigen::VectorXd(), guard_hi});    // x0[g] <= hi
    guard.push_back({-eg, Eigen::VectorXd(), -guard_lo});  // -x0[g] <= -lo
    Eigen::VectorXd ey(1);
    ey << 1.0;
    Disjunct below, above;
    below.guard = guard;
    below.body.push_back({Eigen::VectorXd(), ey, y_low});    // y <= y_low
    above.guard = guard;
    above.body.push_back({Eigen::VectorXd(), -ey, -y_high}); // -y <= -y_high
    return Predicate({below, above});
}

bool evaluate(const Predicate& p, const Eigen::VectorXd& x0, const Eigen::VectorXd& y,
              double eps) {
    const auto& groups = p.guard_groups();
    for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
        if (!p.guard_active(g, x0, eps)) continue;
        bool any = false;
        for (int di : groups[static_cast<size_t>(g)]) {
            const Disjunct& d = p.disjuncts()[static_cast<size_t>(di)];
            bool all = true;
            for (const AffineConstraint& c : d.body)
                if (!c.holds(x0, y, eps)) {
                    all = false;
                    break;
                }
            if (all) {
                any = true;
                break;
            }
        }
        if (!any) return false;
    }
    return true;
}

ViolationDegree violation_degree(const Predicate& p, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& y) {
    const auto& groups = p.guard_groups();
    double worst = 0.0;
    for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
        if (!p.guard_active(g, x0)) continue;
        double group_degree = std::numeric_limits<double>::infinity();
        for (int di : groups[static_cast<size_t>(g)]) {
            const Disjunct& d = p.disjuncts()[static_cast<size_t>(di)];
            double slack = 0.0;
            for (const AffineConstraint& c : d.body)
                slack = std::max(slack, c.positive_slack(x0, y));
            group_degree = std::min(group_degree, slack);
        }
        worst = std::max(worst, group_degree);
    }
    return ViolationDegree{worst};
}

ViolationScan scan_violations_serial(const Predicate& p, const Eigen::MatrixXd& inputs,
                                     const Eigen::MatrixXd& outputs) {
    if (inputs.rows() != outputs.rows())
        throw DimensionError("scan_violations: row count mismatch");
    ViolationScan scan;
    scan.degrees.resize(static_cast<size_t>(inputs.rows()));
    for (Eigen::Index n = 0; n < inputs.rows(); ++n)
        scan.degrees[static_cast<size_t>(n)] =
            violation_degree(p, inputs.row(n).transpose(), outputs.row(n).transpose()).value;
    for (double d : scan.degrees)
        if (d > kEpsFeas) ++scan.violations;
    return scan;
}

ViolationScan scan_violations(const Predicate& p, const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& outputs) {
    if (inputs.rows() != outputs.rows())
        throw DimensionError("scan_violations: row count mismatch");
    ViolationScan scan;
    scan.degrees.resize(static_cast<size_t>(inputs.rows()));
    const Eigen::Index n_rows = inputs.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < n_rows; ++n)
        scan.degrees[static_cast<size_t>(n)] =
            violation_degree(p, inputs.row(n).transpose(), outputs.row(n).transpose()).value;
    for (double d : scan.degrees)
        if (d > kEpsFeas) ++scan.violations;
    return scan;
}

namespace {

json constraint_to_json(const AffineConstraint& c) {
    json jc;
    if (c.a_x.size() > 0) {
        jc["a_x"] = json::array();
        for (Eigen::Index i = 0; i < c.a_x.size(); ++i) jc["a_x"].push_back(c.a_x[i]);
    }
    if (c.a_y.size() > 0) {
        jc["a_y"] = json::array();
        for (Eigen::Index i = 0; i < c.a_y.size(); ++i) jc["a_y"].push_back(c.a_y[i]);
    }
    jc["rhs"] = c.rhs;
    return jc;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw SchemaError(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw SchemaError(std::string(what) + " entries must be numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

AffineConstraint constraint_from_json(const json& jc) {
    AffineConstraint c;
    if (jc.contains("a_x")) c.a_x = vector_from_json(jc["a_x"], "a_x");
    if (jc.contains("a_y")) c.a_y = vector_from_json(jc["a_y"], "a_y");
    if (!jc.contains("rhs") || !jc["rhs"].is_number())
        throw SchemaError("constraint needs numeric rhs");
    c.rhs = jc["rhs"].get<double>();
    return c;
}

} // namespace

std::string predicate_to_json(const Predicate& p) {
    json doc;
    doc["disjuncts"] = json::array();
    for (const Disjunct& d : p.disjuncts()) {
        json jd;
        jd["guard"] = json::array();
        for (const AffineConstraint& g : d.guard) jd["guard"].push_back(constraint_to_json(g));
        jd["body"] = json::array();
        for (const AffineConstraint& b : d.body) jd["body"].push_back(constraint_to_json(b));
        doc["disjuncts"].push_back(std::move(jd));
    }
    return doc.dump(2) + "\n";
}

Predicate predicate_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("predicate JSON parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("disjuncts") || !doc["disjuncts"].is_array())
        throw SchemaError("predicate JSON must have a \"disjuncts\" array");
    std::vector<Disjunct> disjuncts;
    for (const json& jd : doc["disjuncts"]) {
        Disjunct d;
        if (jd.contains("guard"))
            for (const json& jg : jd["guard"]) d.guard.push_back(constraint_from_json(jg));
        if (jd.contains("body"))
            for (const json& jb : jd["body"]) d.body.push_back(constraint_from_json(jb));
        disjuncts.push_back(std::move(d));
    }
    return Predicate(std::move(disjuncts));
}

Predicate load_predicate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open predicate file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return predicate_from_json(buf.str());
}

void save_predicate(const Predicate& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open file for writing: " + path);
    out << predicate_to_json(p);
}

} // namespace nnrep
