#include "gridclear/lp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace gridclear::lp {

namespace {

bool finite(double x) { return std::isfinite(x); }

}  // namespace

int LinearProgram::add_variable(std::string name, double lower, double upper, double objective,
                                VarKind kind) {
    names_.push_back(std::move(name));
    lower_.push_back(lower);
    upper_.push_back(upper);
    objective_.push_back(objective);
    kind_.push_back(kind);
    return num_vars() - 1;
}

int LinearProgram::add_row(std::vector<RowEntry> entries, RowSense sense, double rhs,
                           std::string name) {
    rows_.push_back(Row{std::move(entries), sense, rhs, std::move(name)});
    return num_rows() - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
    lower_[var] = lower;
    upper_[var] = upper;
}

void LinearProgram::set_objective_coeff(int var, double coeff) { objective_[var] = coeff; }

int LinearProgram::num_binaries() const {
    int k = 0;
    for (VarKind v : kind_)
        if (v == VarKind::Binary) ++k;
    return k;
}

void LinearProgram::validate() const {
    for (int j = 0; j < num_vars(); ++j) {
        if (std::isnan(lower_[j]) || std::isnan(upper_[j]))
            throw std::invalid_argument("variable " + names_[j] + " has NaN bound");
        if (lower_[j] > upper_[j])
            throw std::invalid_argument("variable " + names_[j] + " has lower > upper");
        if (kind_[j] == VarKind::Binary && (lower_[j] < -1e-12 || upper_[j] > 1.0 + 1e-12))
            throw std::invalid_argument("binary variable " + names_[j] +
                                        " has bounds outside [0,1]");
        if (!finite(objective_[j]))
            throw std::invalid_argument("variable " + names_[j] +
                                        " has non-finite objective coefficient");
    }
    for (int i = 0; i < num_rows(); ++i) {
        const Row& r = rows_[i];
        if (!finite(r.rhs)) throw std::invalid_argument("row " + r.name + " has non-finite rhs");
        for (const RowEntry& e : r.entries) {
            if (e.var < 0 || e.var >= num_vars())
                throw std::invalid_argument("row " + r.name + " references undeclared variable " +
                                            std::to_string(e.var));
            if (!finite(e.coeff))
                throw std::invalid_argument("row " + r.name + " has non-finite coefficient");
        }
    }
}

std::string LinearProgram::dump() const {
    std::ostringstream os;
    os << (obj_sense_ == ObjSense::Minimize ? "minimize" : "maximize");
    for (int j = 0; j < num_vars(); ++j)
        if (objective_[j] != 0.0) os << " " << objective_[j] << "*" << names_[j];
    os << "\n";
    for (int i = 0; i < num_rows(); ++i) {
        const Row& r = rows_[i];
        os << (r.name.empty() ? "r" + std::to_string(i) : r.name) << ":";
        for (const RowEntry& e : r.entries) os << " " << e.coeff << "*" << names_[e.var];
        switch (r.sense) {
            case RowSense::LessEqual: os << " <= "; break;
            case RowSense::Equal: os << " == "; break;
            case RowSense::GreaterEqual: os << " >= "; break;
        }
        os << r.rhs << "\n";
    }
    for (int j = 0; j < num_vars(); ++j) {
        os << "var " << names_[j] << " in [" << lower_[j] << ", " << upper_[j] << "]"
           << (kind_[j] == VarKind::Binary ? " binary" : "") << "\n";
    }
    return os.str();
}

namespace {

void maybe_dump(const LinearProgram& lp) {
    static std::atomic<long> counter{0};
    const char* dir = std::getenv("GRIDCLEAR_LP_DUMP_DIR");
    if (dir == nullptr || *dir == '\0') return;
    long id = counter.fetch_add(1);
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / ("lp_" + std::to_string(id) + ".txt"));
    out << lp.dump();
}

// Mapping of an original variable onto the shifted/split standard-form columns.
struct ColMap {
    int col = -1;       // primary column
    int neg_col = -1;   // second column of a free split
    double shift = 0.0;
    double sign = 1.0;  // -1 when mirrored around a finite upper bound
    bool fixed = false;
    double fixed_value = 0.0;
};

// Dense two-phase tableau simplex over the standard form
//   min c'x, Ax = b, x >= 0, b >= 0, with an artificial per row.
class Simplex {
public:
    Simplex(const LinearProgram& lp, const std::vector<double>& lower,
            const std::vector<double>& upper, const SimplexOptions& opts)
        : lp_(lp), lower_(lower), upper_(upper), opts_(opts) {}

    SolveResult run() {
        SolveResult res;
        if (!build(res)) return res;
        std::vector<double> phase1_cost(n_total_, 0.0);
        for (int j = art_start_; j < n_total_; ++j) phase1_cost[j] = 1.0;
        SolveStatus st = iterate(phase1_cost, /*allow_artificials=*/true);
        if (st != SolveStatus::Optimal) {
            res.status = st;
            res.message = "phase-1 " + message_;
            return res;
        }
        if (phase_objective(phase1_cost) > opts_.feas_tol * 10.0 + 1e-12) {
            res.status = SolveStatus::Infeasible;
            return res;
        }
        expel_artificials();
        st = iterate(cost_, /*allow_artificials=*/false);
        if (st != SolveStatus::Optimal) {
            res.status = st;
            res.message = message_;
            return res;
        }
        extract(res);
        return res;
    }

private:
    const LinearProgram& lp_;
    const std::vector<double>& lower_;
    const std::vector<double>& upper_;
    SimplexOptions opts_;

    int m_ = 0;          // rows in standard form (original + bound rows)
    int n_struct_ = 0;   // structural columns
    int n_total_ = 0;    // + slacks + artificials
    int art_start_ = 0;
    int n_orig_rows_ = 0;
    std::vector<double> tab_;  // m_ x (n_total_ + 1), last column is rhs
    std::vector<int> basis_;
    std::vector<signed char> row_flip_;  // per original row
    std::vector<ColMap> vmap_;
    std::vector<double> cost_;  // phase-2 costs (internal min sense)
    double obj_scale_ = 1.0;
    std::string message_;

    double& at(int i, int j) { return tab_[static_cast<size_t>(i) * (n_total_ + 1) + j]; }
    double rhs(int i) { return at(i, n_total_); }

    bool build(SolveResult& res) {
        const int nv = lp_.num_vars();
        obj_scale_ = lp_.objective_sense() == ObjSense::Minimize ? 1.0 : -1.0;
        vmap_.assign(nv, {});
        std::vector<double> col_cost;
        std::vector<std::pair<int, double>> bound_rows;  // (col, width)
        for (int j = 0; j < nv; ++j) {
            double lo = lower_[j], up = upper_[j];
            if (lo > up + 1e-12) {
                res.status = SolveStatus::Infeasible;
                return false;
            }
            ColMap& cm = vmap_[j];
            double c = obj_scale_ * lp_.objective_coeff(j);
            if (finite(lo) && finite(up) && up - lo <= 1e-12) {
                cm.fixed = true;
                cm.fixed_value = 0.5 * (lo + up);
                continue;
            }
            if (finite(lo)) {
                cm.col = static_cast<int>(col_cost.size());
                cm.shift = lo;
                cm.sign = 1.0;
                col_cost.push_back(c);
                if (finite(up)) bound_rows.emplace_back(cm.col, up - lo);
            } else if (finite(up)) {
                cm.col = static_cast<int>(col_cost.size());
                cm.shift = up;
                cm.sign = -1.0;
                col_cost.push_back(-c);
            } else {
                cm.col = static_cast<int>(col_cost.size());
                col_cost.push_back(c);
                cm.neg_col = static_cast<int>(col_cost.size());
                col_cost.push_back(-c);
            }
        }
        n_struct_ = static_cast<int>(col_cost.size());
        n_orig_rows_ = lp_.num_rows();
        m_ = n_orig_rows_ + static_cast<int>(bound_rows.size());
        int n_slack = 0;
        for (const Row& r : lp_.rows())
            if (r.sense != RowSense::Equal) ++n_slack;
        n_slack += static_cast<int>(bound_rows.size());
        art_start_ = n_struct_ + n_slack;
        n_total_ = art_start_ + m_;
        tab_.assign(static_cast<size_t>(m_) * (n_total_ + 1), 0.0);
        basis_.assign(m_, -1);
        row_flip_.assign(n_orig_rows_, 1);
        cost_.assign(n_total_, 0.0);
        for (int j = 0; j < n_struct_; ++j) cost_[j] = col_cost[j];

        int slack = n_struct_;
        for (int i = 0; i < n_orig_rows_; ++i) {
            const Row& r = lp_.row(i);
            double b = r.rhs;
            for (const RowEntry& e : r.entries) {
                const ColMap& cm = vmap_[e.var];
                if (cm.fixed) {
                    b -= e.coeff * cm.fixed_value;
                    continue;
                }
                b -= e.coeff * cm.shift;
                at(i, cm.col) += e.coeff * cm.sign;
                if (cm.neg_col >= 0) at(i, cm.neg_col) -= e.coeff;
            }
            if (r.sense == RowSense::LessEqual)
                at(i, slack++) = 1.0;
            else if (r.sense == RowSense::GreaterEqual)
                at(i, slack++) = -1.0;
            at(i, n_total_) = b;
        }
        for (size_t k = 0; k < bound_rows.size(); ++k) {
            int i = n_orig_rows_ + static_cast<int>(k);
            at(i, bound_rows[k].first) = 1.0;
            at(i, slack++) = 1.0;
            at(i, n_total_) = bound_rows[k].second;
        }
        for (int i = 0; i < m_; ++i) {
            if (rhs(i) < 0.0) {
                for (int j = 0; j <= n_total_; ++j) at(i, j) = -at(i, j);
                if (i < n_orig_rows_) row_flip_[i] = -1;
            }
            at(i, art_start_ + i) = 1.0;
            basis_[i] = art_start_ + i;
        }
        return true;
    }

    double phase_objective(const std::vector<double>& cost) {
        double z = 0.0;
        for (int i = 0; i < m_; ++i) z += cost[basis_[i]] * rhs(i);
        return z;
    }

    SolveStatus iterate(const std::vector<double>& cost, bool allow_artificials) {
        std::vector<char> in_basis(n_total_, 0);
        for (int b : basis_) in_basis[b] = 1;
        int degenerate_streak = 0;
        bool bland = false;
        for (int iter = 0; iter < opts_.max_iterations; ++iter) {
            // Reduced costs d_j = c_j - c_B' B^-1 a_j over candidate columns.
            std::vector<double> cb(m_);
            for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
            int enter = -1;
            double best = -opts_.reduced_cost_tol;
            int limit = allow_artificials ? n_total_ : art_start_;
            for (int j = 0; j < limit; ++j) {
                if (in_basis[j]) continue;
                double d = cost[j];
                for (int i = 0; i < m_; ++i) {
                    double t = at(i, j);
                    if (t != 0.0) d -= cb[i] * t;
                }
                if (d < best - 1e-15) {
                    if (bland) {
                        if (d < -opts_.reduced_cost_tol) {
                            enter = j;
                            break;
                        }
                    } else {
                        best = d;
                        enter = j;
                    }
                }
            }
            if (enter < 0) return SolveStatus::Optimal;
            int leave = -1;
            double min_ratio = kInf;
            for (int i = 0; i < m_; ++i) {
                double piv = at(i, enter);
                if (piv > opts_.pivot_tol) {
                    double ratio = rhs(i) / piv;
                    if (ratio < min_ratio - 1e-12 ||
                        (ratio < min_ratio + 1e-12 && (leave < 0 || basis_[i] < basis_[leave]))) {
                        min_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) {
                message_ = "unbounded direction entering column " + std::to_string(enter);
                return SolveStatus::Unbounded;
            }
            if (min_ratio < 1e-12) {
                if (++degenerate_streak >= opts_.degenerate_streak_limit) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
            pivot(leave, enter, in_basis);
        }
        message_ = "cycling guard exceeded after " + std::to_string(opts_.max_iterations) +
                   " iterations";
        return SolveStatus::IterationLimit;
    }

    void pivot(int r, int e, std::vector<char>& in_basis) {
        double piv = at(r, e);
        double inv = 1.0 / piv;
        for (int j = 0; j <= n_total_; ++j) at(r, j) *= inv;
        at(r, e) = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double f = at(i, e);
            if (f == 0.0) continue;
            for (int j = 0; j <= n_total_; ++j) at(i, j) -= f * at(r, j);
            at(i, e) = 0.0;
        }
        in_basis[basis_[r]] = 0;
        in_basis[e] = 1;
        basis_[r] = e;
    }

    void expel_artificials() {
        std::vector<char> in_basis(n_total_, 0);
        for (int b : basis_) in_basis[b] = 1;
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < art_start_) continue;
            for (int j = 0; j < art_start_; ++j) {
                if (!in_basis[j] && std::abs(at(i, j)) > opts_.pivot_tol) {
                    pivot(i, j, in_basis);
                    break;
                }
            }
            // A remaining basic artificial marks a redundant row; it stays at
            // zero because every structural entry of the row vanished.
        }
    }

    void extract(SolveResult& res) {
        std::vector<double> xs(n_total_, 0.0);
        for (int i = 0; i < m_; ++i) xs[basis_[i]] = rhs(i);
        res.primal.assign(lp_.num_vars(), 0.0);
        for (int j = 0; j < lp_.num_vars(); ++j) {
            const ColMap& cm = vmap_[j];
            if (cm.fixed) {
                res.primal[j] = cm.fixed_value;
            } else if (cm.neg_col >= 0) {
                res.primal[j] = xs[cm.col] - xs[cm.neg_col];
            } else {
                res.primal[j] = cm.shift + cm.sign * xs[cm.col];
            }
        }
        double obj = 0.0;
        for (int j = 0; j < lp_.num_vars(); ++j)
            obj += lp_.objective_coeff(j) * res.primal[j];
        res.objective = obj;
        res.row_duals.assign(n_orig_rows_, 0.0);
        std::vector<double> cb(m_);
        for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
        for (int i = 0; i < n_orig_rows_; ++i) {
            double y = 0.0;
            int art = art_start_ + i;
            for (int k = 0; k < m_; ++k) {
                double t = at(k, art);
                if (t != 0.0) y += cb[k] * t;
            }
            y *= row_flip_[i];
            res.row_duals[i] = obj_scale_ * y;  // shadow price in the native sense
        }
        res.has_duals = true;
        res.status = SolveStatus::Optimal;
    }
};

}  // namespace

SolveResult solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
    std::vector<double> lo(lp.num_vars()), up(lp.num_vars());
    for (int j = 0; j < lp.num_vars(); ++j) {
        lo[j] = lp.lower(j);
        up[j] = lp.upper(j);
    }
    return solve_lp_with_bounds(lp, lo, up, opts);
}

SolveResult solve_lp_with_bounds(const LinearProgram& lp, const std::vector<double>& lower,
                                 const std::vector<double>& upper, const SimplexOptions& opts) {
    lp.validate();
    maybe_dump(lp);
    Simplex s(lp, lower, upper, opts);
    return s.run();
}

namespace {

struct BbNode {
    double bound = 0.0;  // LP relaxation value, internal min sense
    long id = 0;
    std::vector<std::pair<int, int>> fixings;  // (binary var, value)
};

struct BbNodeOrder {
    bool operator()(const BbNode& a, const BbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

}  // namespace

SolveResult solve_milp(const LinearProgram& lp, double gap, const MilpOptions& opts) {
    lp.validate();
    if (gap < 0.0 || gap > 1.0) throw std::invalid_argument("MIP gap must lie in [0,1]");
    const double sense = lp.objective_sense() == ObjSense::Minimize ? 1.0 : -1.0;
    std::vector<int> binaries;
    for (int j = 0; j < lp.num_vars(); ++j)
        if (lp.kind(j) == VarKind::Binary) binaries.push_back(j);

    std::vector<double> base_lo(lp.num_vars()), base_up(lp.num_vars());
    for (int j = 0; j < lp.num_vars(); ++j) {
        base_lo[j] = lp.lower(j);
        base_up[j] = lp.upper(j);
    }

    auto relax = [&](const std::vector<std::pair<int, int>>& fixings, std::vector<double>& lo,
                     std::vector<double>& up) {
        lo = base_lo;
        up = base_up;
        for (auto [v, val] : fixings) {
            lo[v] = std::max(lo[v], static_cast<double>(val));
            up[v] = std::min(up[v], static_cast<double>(val));
        }
    };

    SolveResult out;
    out.status = SolveStatus::Infeasible;
    bool have_incumbent = false;
    double incumbent = kInf;  // internal min sense
    std::vector<double> incumbent_primal;
    long next_id = 0;
    std::priority_queue<BbNode, std::vector<BbNode>, BbNodeOrder> open;

    auto eval = [&](BbNode& node, bool& integral, int& branch_var) -> SolveResult {
        std::vector<double> lo, up;
        relax(node.fixings, lo, up);
        SolveResult r = solve_lp_with_bounds(lp, lo, up, opts.simplex);
        integral = true;
        branch_var = -1;
        if (r.status != SolveStatus::Optimal) return r;
        node.bound = sense * r.objective;
        double best_frac = -1.0;
        for (int v : binaries) {
            double x = r.primal[v];
            double f = x - std::floor(x);
            double dist = std::min(f, 1.0 - f);
            if (dist > opts.int_tol) {
                integral = false;
                // most fractional first, ties by lowest index
                if (dist > best_frac + 1e-12) {
                    best_frac = dist;
                    branch_var = v;
                }
            }
        }
        return r;
    };

    BbNode root;
    root.id = next_id++;
    bool integral = false;
    int branch_var = -1;
    SolveResult r = eval(root, integral, branch_var);
    if (r.status == SolveStatus::Infeasible || r.status == SolveStatus::Unbounded) {
        out.status = r.status;
        out.message = r.message;
        return out;
    }
    if (r.status != SolveStatus::Optimal) {
        out.status = r.status;
        out.message = r.message;
        return out;
    }
    long nodes = 1;
    double root_bound = root.bound;
    if (integral) {
        incumbent = root.bound;
        incumbent_primal = r.primal;
        have_incumbent = true;
    } else {
        open.push(root);
    }

    auto current_gap = [&](double best_bound) {
        if (!have_incumbent) return kInf;
        return (incumbent - best_bound) / std::max(std::abs(incumbent), 1e-9);
    };

    double best_bound = root_bound;
    while (!open.empty()) {
        best_bound = open.top().bound;
        if (have_incumbent && current_gap(best_bound) <= gap + 1e-12) break;
        BbNode node = open.top();
        open.pop();
        if (have_incumbent && node.bound >= incumbent - 1e-9) continue;
        // Re-solve and branch.
        SolveResult nr = eval(node, integral, branch_var);
        ++nodes;
        if (nr.status != SolveStatus::Optimal) continue;  // infeasible child
        if (have_incumbent && node.bound >= incumbent - 1e-9) continue;
        if (integral) {
            if (!have_incumbent || node.bound < incumbent) {
                incumbent = node.bound;
                incumbent_primal = nr.primal;
                have_incumbent = true;
            }
            continue;
        }
        if (nodes >= opts.max_nodes) {
            out.status = SolveStatus::NodeLimit;
            out.message = "node limit reached";
            break;
        }
        for (int val : {0, 1}) {
            BbNode child;
            child.fixings = node.fixings;
            child.fixings.emplace_back(branch_var, val);
            child.bound = node.bound;
            child.id = next_id++;
            open.push(child);
        }
    }
    if (open.empty() && have_incumbent) best_bound = incumbent;

    out.nodes_explored = nodes;
    if (have_incumbent) {
        if (!binaries.empty()) {
            // Polish: fix every binary at its rounded value and re-solve the
            // LP so continuous variables carry no int_tol-sized leakage.
            std::vector<double> lo = base_lo, up = base_up;
            for (int v : binaries) {
                double x = std::round(incumbent_primal[v]);
                lo[v] = x;
                up[v] = x;
            }
            SolveResult polished = solve_lp_with_bounds(lp, lo, up, opts.simplex);
            if (polished.status == SolveStatus::Optimal) {
                incumbent_primal = polished.primal;
                incumbent = sense * polished.objective;
            }
        }
        if (out.status != SolveStatus::NodeLimit) out.status = SolveStatus::Optimal;
        out.primal = incumbent_primal;
        out.objective = sense * incumbent;
        out.incumbent_objective = out.objective;
        out.best_bound = sense * best_bound;
        out.achieved_gap = std::max(0.0, current_gap(best_bound));
        out.has_duals = false;
    } else if (out.status != SolveStatus::NodeLimit) {
        out.status = SolveStatus::Infeasible;
    }
    return out;
}

SolveResult enumerate_oracle(const LinearProgram& lp, int max_binaries) {
    lp.validate();
    std::vector<int> binaries;
    for (int j = 0; j < lp.num_vars(); ++j)
        if (lp.kind(j) == VarKind::Binary) binaries.push_back(j);
    const int k = static_cast<int>(binaries.size());
    if (k > max_binaries)
        throw std::invalid_argument("enumeration refused: " + std::to_string(k) +
                                    " binaries exceed limit " + std::to_string(max_binaries));
    const double sense = lp.objective_sense() == ObjSense::Minimize ? 1.0 : -1.0;
    std::vector<double> lo(lp.num_vars()), up(lp.num_vars());
    SolveResult best;
    best.status = SolveStatus::Infeasible;
    double best_val = kInf;
    for (unsigned long mask = 0; mask < (1ul << k); ++mask) {
        for (int j = 0; j < lp.num_vars(); ++j) {
            lo[j] = lp.lower(j);
            up[j] = lp.upper(j);
        }
        bool consistent = true;
        for (int b = 0; b < k; ++b) {
            double v = (mask >> b) & 1 ? 1.0 : 0.0;
            int var = binaries[b];
            lo[var] = std::max(lo[var], v);
            up[var] = std::min(up[var], v);
            if (lo[var] > up[var]) consistent = false;
        }
        if (!consistent) continue;
        SolveResult r = solve_lp_with_bounds(lp, lo, up);
        if (r.status != SolveStatus::Optimal) continue;
        double v = sense * r.objective;
        if (v < best_val - 1e-12) {
            best_val = v;
            best = r;
        }
    }
    if (best.status == SolveStatus::Optimal) {
        best.has_duals = false;
        best.row_duals.clear();
        best.incumbent_objective = best.objective;
        best.best_bound = best.objective;
        best.achieved_gap = 0.0;
    }
    return best;
}

}  // namespace gridclear::lp
