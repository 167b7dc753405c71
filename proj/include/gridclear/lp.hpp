#pragma once

#include <limits>
#include <string>
#include <vector>

namespace gridclear::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class VarKind { Continuous, Binary };
enum class ObjSense { Minimize, Maximize };

struct RowEntry {
    int var = -1;
    double coeff = 0.0;
};

struct Row {
    std::vector<RowEntry> entries;
    RowSense sense = RowSense::LessEqual;
    double rhs = 0.0;
    std::string name;
};

/// Sparse-row LP/MILP description. Immutable once handed to a solver.
class LinearProgram {
public:
    int add_variable(std::string name, double lower, double upper, double objective,
                     VarKind kind = VarKind::Continuous);
    int add_row(std::vector<RowEntry> entries, RowSense sense, double rhs, std::string name = "");

    void set_objective_sense(ObjSense sense) { obj_sense_ = sense; }
    void set_bounds(int var, double lower, double upper);
    void set_objective_coeff(int var, double coeff);

    ObjSense objective_sense() const { return obj_sense_; }
    int num_vars() const { return static_cast<int>(lower_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    int num_binaries() const;
    double lower(int j) const { return lower_[j]; }
    double upper(int j) const { return upper_[j]; }
    double objective_coeff(int j) const { return objective_[j]; }
    VarKind kind(int j) const { return kind_[j]; }
    const std::string& var_name(int j) const { return names_[j]; }
    const Row& row(int i) const { return rows_[i]; }
    const std::vector<Row>& rows() const { return rows_; }

    /// Throws std::invalid_argument on malformed bounds, binary bounds outside
    /// [0,1], or rows referencing undeclared variables.
    void validate() const;

    /// Plain-text dump, one constraint per line.
    std::string dump() const;

private:
    ObjSense obj_sense_ = ObjSense::Minimize;
    std::vector<double> lower_, upper_, objective_;
    std::vector<VarKind> kind_;
    std::vector<std::string> names_;
    std::vector<Row> rows_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> primal;
    double objective = 0.0;
    /// Shadow prices dObj/dRHS per original row. Pure-LP solves only.
    std::vector<double> row_duals;
    bool has_duals = false;
    // MILP bookkeeping.
    double incumbent_objective = 0.0;
    double best_bound = 0.0;
    double achieved_gap = 0.0;
    long nodes_explored = 0;
    std::string message;
};

struct SimplexOptions {
    double feas_tol = 1e-7;        // absolute, per constraint
    double pivot_tol = 1e-9;
    double reduced_cost_tol = 1e-9;
    int max_iterations = 200000;
    int degenerate_streak_limit = 50;  // switch to Bland's rule after this many
};

struct MilpOptions {
    long max_nodes = 200000;
    double int_tol = 1e-6;
    SimplexOptions simplex;
};

SolveResult solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

/// Variant with per-variable bound overrides (used by branch and bound).
SolveResult solve_lp_with_bounds(const LinearProgram& lp, const std::vector<double>& lower,
                                 const std::vector<double>& upper, const SimplexOptions& opts = {});

/// Branch and bound: most-fractional branching, best-bound node selection,
/// ties broken by lowest variable index. Duals are never exposed.
SolveResult solve_milp(const LinearProgram& lp, double gap, const MilpOptions& opts = {});

/// Exhaustive enumeration of binary assignments, each reduced to an LP solve.
/// Throws std::invalid_argument when the binary count exceeds max_binaries.
SolveResult enumerate_oracle(const LinearProgram& lp, int max_binaries = 20);

}  // namespace gridclear::lp
