#include "nnrep/model.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace nnrep {

int MiqpModel::add_var(const VarInfo& info, double lo, double hi) {
    var_info.push_back(info);
    var_lo.push_back(lo);
    var_hi.push_back(hi);
    obj_quad.push_back(0.0);
    obj_lin.push_back(0.0);
    return num_vars++;
}

void MiqpModel::add_row(LinearRow row) {
    for (const auto& [idx, coeff] : row.terms) {
        if (idx < 0 || idx >= num_vars) throw Error("constraint references unknown variable");
        if (!std::isfinite(coeff)) throw Error("constraint coefficient is not finite");
    }
    rows.push_back(std::move(row));
}

int MiqpModel::find_var(VarKind kind, int sample, int layer, int row, int col) const {
    for (int i = 0; i < num_vars; ++i) {
        const VarInfo& v = var_info[static_cast<size_t>(i)];
        if (v.kind == kind && v.sample == sample && v.layer == layer && v.row == row &&
            v.col == col)
            return i;
    }
    return -1;
}

double MiqpModel::objective_value(const Eigen::VectorXd& x) const {
    double val = obj_const;
    for (int i = 0; i < num_vars; ++i)
        val += obj_quad[static_cast<size_t>(i)] * x[i] * x[i] + obj_lin[static_cast<size_t>(i)] * x[i];
    return val;
}

double MiqpModel::max_infeasibility(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (int i = 0; i < num_vars; ++i) {
        worst = std::max(worst, var_lo[static_cast<size_t>(i)] - x[i]);
        worst = std::max(worst, x[i] - var_hi[static_cast<size_t>(i)]);
    }
    for (const LinearRow& row : rows) {
        double v = 0.0;
        for (const auto& [idx, coeff] : row.terms) v += coeff * x[idx];
        worst = std::max(worst, row.lo - v);
        worst = std::max(worst, v - row.hi);
    }
    return worst;
}

std::string MiqpModel::var_name(int idx) const {
    const VarInfo& v = var_info[static_cast<size_t>(idx)];
    std::ostringstream os;
    switch (v.kind) {
        case VarKind::Weight: os << "w_l" << v.layer << "_" << v.row << "_" << v.col; break;
        case VarKind::Bias: os << "b_l" << v.layer << "_" << v.row; break;
        case VarKind::Node: os << "x_n" << v.sample << "_l" << v.layer << "_" << v.row; break;
        case VarKind::Output: os << "y_n" << v.sample << "_" << v.row; break;
        case VarKind::ReluBinary: os << "phi_n" << v.sample << "_l" << v.layer << "_" << v.row; break;
        case VarKind::Selector: os << "z_n" << v.sample << "_" << v.row; break;
        case VarKind::Deviation: os << "delta"; break;
        case VarKind::L1Pos: os << "up_" << v.row; break;
        case VarKind::L1Neg: os << "um_" << v.row; break;
        case VarKind::Input: os << "x0_" << v.row; break;
        case VarKind::Slack: os << "s_margin"; break;
    }
    return os.str();
}

void MiqpModel::write_lp(std::ostream& os) const {
    os.precision(17);
    os << "\\ nnrep model export: " << num_vars << " vars, " << rows.size() << " rows, "
       << binaries.size() << " binaries\n";
    os << "Minimize\n obj: ";
    bool first = true;
    for (int i = 0; i < num_vars; ++i) {
        const double c = obj_lin[static_cast<size_t>(i)];
        if (c == 0.0) continue;
        os << (c >= 0.0 && !first ? "+ " : "") << c << " " << var_name(i) << " ";
        first = false;
    }
    bool any_quad = false;
    for (double qd : obj_quad) any_quad |= qd != 0.0;
    if (any_quad) {
        // Gurobi/CPLEX LP convention: [ q ] / 2 with q holding 2*coefficient.
        os << (first ? "" : "+ ") << "[ ";
        bool qfirst = true;
        for (int i = 0; i < num_vars; ++i) {
            const double qd = obj_quad[static_cast<size_t>(i)];
            if (qd == 0.0) continue;
            os << (qfirst ? "" : "+ ") << 2.0 * qd << " " << var_name(i) << " ^ 2 ";
            qfirst = false;
        }
        os << "] / 2";
    } else if (first) {
        os << "0";
    }
    os << "\nSubject To\n";
    const double inf = std::numeric_limits<double>::infinity();
    int r = 0;
    for (const LinearRow& row : rows) {
        auto write_terms = [&]() {
            bool tfirst = true;
            for (const auto& [idx, coeff] : row.terms) {
                os << (coeff >= 0.0 && !tfirst ? "+ " : "") << coeff << " " << var_name(idx) << " ";
                tfirst = false;
            }
        };
        if (row.lo == row.hi) {
            os << " c" << r++ << ": ";
            write_terms();
            os << "= " << row.lo << "\n";
        } else {
            if (row.hi < inf) {
                os << " c" << r++ << ": ";
                write_terms();
                os << "<= " << row.hi << "\n";
            }
            if (row.lo > -inf) {
                os << " c" << r++ << ": ";
                write_terms();
                os << ">= " << row.lo << "\n";
            }
        }
    }
    os << "Bounds\n";
    for (int i = 0; i < num_vars; ++i) {
        const double lo = var_lo[static_cast<size_t>(i)];
        const double hi = var_hi[static_cast<size_t>(i)];
        if (lo == -inf && hi == inf)
            os << " " << var_name(i) << " free\n";
        else if (lo == -inf)
            os << " -inf <= " << var_name(i) << " <= " << hi << "\n";
        else if (hi == inf)
            os << " " << var_name(i) << " >= " << lo << "\n";
        else
            os << " " << lo << " <= " << var_name(i) << " <= " << hi << "\n";
    }
    if (!binaries.empty()) {
        os << "Binaries\n";
        for (int b : binaries) os << " " << var_name(b) << "\n";
    }
    os << "End\n";
}

void MiqpModel::validate() const {
    if (num_vars <= 0) throw Error("model has no variables");
    for (double qd : obj_quad)
        if (qd < 0.0 || !std::isfinite(qd)) throw Error("objective Hessian is not diagonal PSD");
    for (double c : obj_lin)
        if (!std::isfinite(c)) throw Error("objective has non-finite coefficient");
    for (int i = 0; i < num_vars; ++i)
        if (var_lo[static_cast<size_t>(i)] > var_hi[static_cast<size_t>(i)])
            throw Error("variable " + var_name(i) + " has inverted bounds");
    for (int b : binaries) {
        if (b < 0 || b >= num_vars) throw Error("binary index out of range");
        if (var_lo[static_cast<size_t>(b)] < 0.0 || var_hi[static_cast<size_t>(b)] > 1.0)
            throw Error("binary variable must have bounds within [0,1]");
    }
}

} // namespace nnrep
