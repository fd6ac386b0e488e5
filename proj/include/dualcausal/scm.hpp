#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "dualcausal/rng.hpp"

namespace dcl::scm {

// Fixed variable roles of the causal graph: cross-modal bias, visual
// confounder, video, text, mediator, label.
enum VarId : std::size_t { B = 0, Z = 1, V = 2, T = 3, M = 4, Y = 5 };
inline constexpr std::size_t kNumVars = 6;
inline constexpr std::size_t kMaxCard = 8;
const std::array<std::string, kNumVars>& var_names();

using Assignment = std::array<std::size_t, kNumVars>;

// Evidence: value per variable, -1 for unobserved.
using Evidence = std::array<int, kNumVars>;
Evidence no_evidence();

// Probability vector over one variable's values.
struct Distribution {
    std::vector<double> p;

    void validate() const; // nonnegative, sums to 1 within 1e-12
    std::size_t argmax() const;
};

// Discrete structural causal model with explicit conditional probability
// tables. Small cardinalities keep full-joint enumeration exact and cheap;
// the model is immutable once validated and safe to share across threads.
struct DiscreteScm {
    std::array<std::size_t, kNumVars> card{};
    std::array<std::vector<std::size_t>, kNumVars> parents;
    // cpt[v][parent_combo][value]; parent_combo indexes the parents in listed
    // order, row-major (first parent varies slowest).
    std::array<std::vector<std::vector<double>>, kNumVars> cpt;

    // Throws InvalidArgumentError on any structural violation: bad
    // cardinality, cyclic graph, CPT row count/length mismatch, rows that do
    // not sum to 1 within 1e-12.
    void validate() const;

    bool has_edge(std::size_t from, std::size_t to) const;
    std::vector<std::size_t> children_of(std::size_t var) const;
    std::vector<std::size_t> topo_order() const;
    std::vector<bool> descendants_of(std::size_t var) const; // excludes var

    std::size_t parent_combo_index(std::size_t var, const Assignment& a) const;
    double joint(const Assignment& a) const;

    // Graph surgery: removes edges into `var` and pins it to `value`.
    DiscreteScm intervene(std::size_t var, std::size_t value) const;
};

// Exact conditional P(target | evidence) by full-joint enumeration.
// Throws UndefinedConditionalError when the evidence has zero probability.
Distribution condition(const DiscreteScm& scm, std::size_t target, const Evidence& evidence);

// Marginal P(target).
Distribution marginal(const DiscreteScm& scm, std::size_t target);

// d-separation of {x} and {y} given `given` (reachability over active trails).
bool d_separated(const DiscreteScm& scm, std::size_t x, std::size_t y,
                 const std::vector<std::size_t>& given);

// Observational prediction decomposed over the confounders:
//   P(Y | v, t) = sum_z sum_b P(Y | v,t,z,b) P(z | v,t) P(b | t)
// computed term-by-term with exact enumeration.
Distribution observational(const DiscreteScm& scm, std::size_t v, std::size_t t);

// Back-door adjustment over B, conditioned on the visual context:
//   P(Y | v, do(t)) = sum_b P(Y | v, t, b) P(b)
// Verified applicable first; throws CriterionError when the configured graph
// does not satisfy the exchangeability conditions that make it exact.
Distribution do_t_backdoor(const DiscreteScm& scm, std::size_t v, std::size_t t);

// Same adjustment without the visual context: P(Y | do(t)) = sum_b P(Y|t,b) P(b).
Distribution do_t_backdoor_marginal(const DiscreteScm& scm, std::size_t t);

// Front-door adjustment through the mediator:
//   P(Y | do(v)) = sum_m P(m | v) sum_v' P(v') P(Y | m, v')
// Criterion checked graph-theoretically; throws CriterionError on violation.
Distribution do_v_frontdoor(const DiscreteScm& scm, std::size_t v);

// Surgery ground truth: P(target | evidence) in the mutilated graph.
Distribution surgery_truth(const DiscreteScm& scm, std::size_t var, std::size_t value,
                           std::size_t target, const Evidence& evidence);

// Forward/rejection Monte-Carlo estimates (verification oracles).
struct McEstimate {
    std::vector<double> p;      // estimated distribution over the target
    std::size_t samples = 0;    // accepted sample count
    std::vector<double> stderr_; // per-value standard error sqrt(p(1-p)/n)
};
McEstimate mc_conditional(const DiscreteScm& scm, std::size_t target, const Evidence& evidence,
                          std::size_t num_samples, std::uint64_t seed);
McEstimate mc_do(const DiscreteScm& scm, std::size_t var, std::size_t value, std::size_t target,
                 std::size_t num_samples, std::uint64_t seed);

// Fixture (de)serialization: a JSON document listing the six variables with
// cardinalities, parent names, and CPT rows.
DiscreteScm load_scm_json(const std::string& text);
DiscreteScm load_scm_file(const std::string& path);
std::string scm_to_json(const DiscreteScm& scm);

// Seeded generators for the verification batteries.
enum class ScmFamily { backdoor, frontdoor };
DiscreteScm make_random_scm(ScmFamily family, Rng& rng, std::size_t max_card = 4);
// Deliberately criterion-violating variants (B->V edge resp. direct V->Y edge).
DiscreteScm make_violating_scm(ScmFamily family, Rng& rng);

} // namespace dcl::scm
