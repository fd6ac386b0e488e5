#include "dualcausal/scm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dualcausal/errors.hpp"

namespace dcl::scm {

namespace {

using nlohmann::json;

constexpr double kRowTol = 1e-12;

std::size_t name_to_id(const std::string& name) {
    const auto& names = var_names();
    for (std::size_t i = 0; i < kNumVars; ++i)
        if (names[i] == name) return i;
    throw ParseError("scm: unknown variable name '" + name + "'");
}

// Iterates every full assignment; f(assignment, joint probability).
template <class F>
void for_each_assignment(const DiscreteScm& scm, F&& f) {
    Assignment a{};
    while (true) {
        f(const_cast<const Assignment&>(a), scm.joint(a));
        std::size_t k = kNumVars;
        while (k > 0) {
            --k;
            if (++a[k] < scm.card[k]) break;
            a[k] = 0;
            if (k == 0) return;
        }
    }
}

bool matches(const Assignment& a, const Evidence& e) {
    for (std::size_t i = 0; i < kNumVars; ++i)
        if (e[i] >= 0 && a[i] != static_cast<std::size_t>(e[i])) return false;
    return true;
}

std::string evidence_str(const Evidence& e) {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = 0; i < kNumVars; ++i) {
        if (e[i] < 0) continue;
        os << (first ? "" : ", ") << var_names()[i] << "=" << e[i];
        first = false;
    }
    return first ? "(none)" : os.str();
}

} // namespace

const std::array<std::string, kNumVars>& var_names() {
    static const std::array<std::string, kNumVars> names{"B", "Z", "V", "T", "M", "Y"};
    return names;
}

Evidence no_evidence() {
    Evidence e;
    e.fill(-1);
    return e;
}

void Distribution::validate() const {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw NumericError("Distribution: negative or NaN probability");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTol) {
        throw NumericError("Distribution: probabilities sum to " + std::to_string(sum));
    }
}

std::size_t Distribution::argmax() const {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

void DiscreteScm::validate() const {
    for (std::size_t v = 0; v < kNumVars; ++v) {
        if (card[v] < 1 || card[v] > kMaxCard) {
            throw InvalidArgumentError("scm: cardinality of " + var_names()[v] + " must be in [1," +
                                       std::to_string(kMaxCard) + "], got " + std::to_string(card[v]));
        }
        std::size_t combos = 1;
        for (std::size_t p : parents[v]) {
            if (p >= kNumVars) throw InvalidArgumentError("scm: bad parent index");
            if (p == v) throw InvalidArgumentError("scm: " + var_names()[v] + " is its own parent");
            combos *= card[p];
        }
        if (cpt[v].size() != combos) {
            throw InvalidArgumentError("scm: CPT of " + var_names()[v] + " has " +
                                       std::to_string(cpt[v].size()) + " rows, expected " +
                                       std::to_string(combos));
        }
        for (const auto& row : cpt[v]) {
            if (row.size() != card[v]) {
                throw InvalidArgumentError("scm: CPT row length mismatch for " + var_names()[v]);
            }
            double sum = 0.0;
            for (double x : row) {
                if (!(x >= 0.0) || !std::isfinite(x)) {
                    throw InvalidArgumentError("scm: CPT of " + var_names()[v] + " has invalid entry");
                }
                sum += x;
            }
            if (std::abs(sum - 1.0) > kRowTol) {
                throw InvalidArgumentError("scm: CPT row of " + var_names()[v] + " sums to " +
                                           std::to_string(sum));
            }
        }
    }
    topo_order(); // throws on cycles
}

bool DiscreteScm::has_edge(std::size_t from, std::size_t to) const {
    const auto& ps = parents[to];
    return std::find(ps.begin(), ps.end(), from) != ps.end();
}

std::vector<std::size_t> DiscreteScm::children_of(std::size_t var) const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < kNumVars; ++v)
        if (has_edge(var, v)) out.push_back(v);
    return out;
}

std::vector<std::size_t> DiscreteScm::topo_order() const {
    std::array<std::size_t, kNumVars> indeg{};
    for (std::size_t v = 0; v < kNumVars; ++v) indeg[v] = parents[v].size();
    std::vector<std::size_t> order;
    std::deque<std::size_t> ready;
    for (std::size_t v = 0; v < kNumVars; ++v)
        if (indeg[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        std::size_t v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (std::size_t c : children_of(v))
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order.size() != kNumVars) throw InvalidArgumentError("scm: graph has a cycle");
    return order;
}

std::vector<bool> DiscreteScm::descendants_of(std::size_t var) const {
    std::vector<bool> seen(kNumVars, false);
    std::deque<std::size_t> frontier{var};
    while (!frontier.empty()) {
        std::size_t v = frontier.front();
        frontier.pop_front();
        for (std::size_t c : children_of(v)) {
            if (!seen[c]) {
                seen[c] = true;
                frontier.push_back(c);
            }
        }
    }
    seen[var] = false;
    return seen;
}

std::size_t DiscreteScm::parent_combo_index(std::size_t var, const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t p : parents[var]) idx = idx * card[p] + a[p];
    return idx;
}

double DiscreteScm::joint(const Assignment& a) const {
    double prob = 1.0;
    for (std::size_t v = 0; v < kNumVars; ++v) {
        prob *= cpt[v][parent_combo_index(v, a)][a[v]];
    }
    return prob;
}

DiscreteScm DiscreteScm::intervene(std::size_t var, std::size_t value) const {
    if (value >= card[var]) {
        throw InvalidArgumentError("scm: intervention value " + std::to_string(value) +
                                   " out of range for " + var_names()[var]);
    }
    DiscreteScm cut = *this;
    cut.parents[var].clear();
    std::vector<double> row(card[var], 0.0);
    row[value] = 1.0;
    cut.cpt[var] = {row};
    return cut;
}

Distribution condition(const DiscreteScm& scm, std::size_t target, const Evidence& evidence) {
    std::vector<double> acc(scm.card[target], 0.0);
    double total = 0.0;
    for_each_assignment(scm, [&](const Assignment& a, double prob) {
        if (!matches(a, evidence)) return;
        acc[a[target]] += prob;
        total += prob;
    });
    if (total <= 0.0) {
        throw UndefinedConditionalError("scm: conditioning event has zero probability: " +
                                        evidence_str(evidence));
    }
    for (double& v : acc) v /= total;
    Distribution d{std::move(acc)};
    d.validate();
    return d;
}

Distribution marginal(const DiscreteScm& scm, std::size_t target) {
    return condition(scm, target, no_evidence());
}

// Active-trail reachability. Phase 1 marks the conditioning set and its
// ancestors (collider activation); phase 2 walks (node, direction) states,
// where `down` means the trail arrived through an incoming edge.
bool d_separated(const DiscreteScm& scm, std::size_t x, std::size_t y,
                 const std::vector<std::size_t>& given) {
    std::array<bool, kNumVars> in_given{};
    for (std::size_t g : given) in_given[g] = true;
    if (x == y) return false;

    std::array<bool, kNumVars> anc_of_given{};
    {
        std::deque<std::size_t> frontier;
        for (std::size_t g : given) {
            if (!anc_of_given[g]) {
                anc_of_given[g] = true;
                frontier.push_back(g);
            }
        }
        while (!frontier.empty()) {
            std::size_t v = frontier.front();
            frontier.pop_front();
            for (std::size_t p : scm.parents[v]) {
                if (!anc_of_given[p]) {
                    anc_of_given[p] = true;
                    frontier.push_back(p);
                }
            }
        }
    }

    enum Dir { kUp = 0, kDown = 1 }; // up: arrived from a child; down: arrived from a parent
    std::array<std::array<bool, 2>, kNumVars> visited{};
    std::deque<std::pair<std::size_t, int>> frontier{{x, kUp}};
    while (!frontier.empty()) {
        auto [node, dir] = frontier.front();
        frontier.pop_front();
        if (visited[node][dir]) continue;
        visited[node][dir] = true;
        if (!in_given[node] && node == y) return false;

        if (dir == kUp && !in_given[node]) {
            for (std::size_t p : scm.parents[node]) frontier.emplace_back(p, kUp);
            for (std::size_t c : scm.children_of(node)) frontier.emplace_back(c, kDown);
        } else if (dir == kDown) {
            if (!in_given[node]) {
                for (std::size_t c : scm.children_of(node)) frontier.emplace_back(c, kDown);
            }
            if (anc_of_given[node]) {
                for (std::size_t p : scm.parents[node]) frontier.emplace_back(p, kUp);
            }
        }
    }
    return true;
}

Distribution observational(const DiscreteScm& scm, std::size_t v, std::size_t t) {
    Evidence vt = no_evidence();
    vt[V] = static_cast<int>(v);
    vt[T] = static_cast<int>(t);
    // Validates the conditioning event up front.
    condition(scm, Y, vt);

    Evidence t_only = no_evidence();
    t_only[T] = static_cast<int>(t);
    const Distribution p_b_given_t = condition(scm, B, t_only);
    const Distribution p_z_given_vt = condition(scm, Z, vt);

    std::vector<double> acc(scm.card[Y], 0.0);
    for (std::size_t z = 0; z < scm.card[Z]; ++z) {
        for (std::size_t b = 0; b < scm.card[B]; ++b) {
            const double weight = p_z_given_vt.p[z] * p_b_given_t.p[b];
            if (weight == 0.0) continue;
            Evidence full = vt;
            full[Z] = static_cast<int>(z);
            full[B] = static_cast<int>(b);
            const Distribution p_y = condition(scm, Y, full);
            for (std::size_t y = 0; y < scm.card[Y]; ++y) acc[y] += weight * p_y.p[y];
        }
    }
    Distribution d{std::move(acc)};
    d.validate();
    return d;
}

namespace {

// The conditional back-door formula sum_b P(Y|context,t,b) P(b) equals surgery
// truth exactly iff (i) B is not a descendant of T, (ii) B is independent of
// the context in the graph with edges into T removed, and (iii) Y is
// d-separated from T given {B} + context once edges out of T are removed.
void check_backdoor_criterion(const DiscreteScm& scm, bool with_context) {
    if (scm.descendants_of(T)[B]) {
        throw CriterionError("backdoor: B is a descendant of T");
    }
    DiscreteScm do_graph = scm;
    do_graph.parents[T].clear();
    do_graph.cpt[T].assign(1, std::vector<double>(scm.card[T], 1.0 / static_cast<double>(scm.card[T])));
    if (with_context && !d_separated(do_graph, B, V, {})) {
        throw CriterionError("backdoor: B and V are dependent under do(T); P(b | v, do(t)) != P(b)");
    }
    DiscreteScm outcut = scm;
    // Removing edges out of T = dropping T from every child's parent list is
    // awkward with CPTs; d-separation only needs the structure, so build a
    // structural copy with T's outgoing edges deleted and dummy uniform rows.
    for (std::size_t c = 0; c < kNumVars; ++c) {
        auto& ps = outcut.parents[c];
        auto it = std::find(ps.begin(), ps.end(), static_cast<std::size_t>(T));
        if (it != ps.end()) {
            ps.erase(it);
            std::size_t combos = 1;
            for (std::size_t p : ps) combos *= outcut.card[p];
            outcut.cpt[c].assign(combos, std::vector<double>(outcut.card[c],
                                                             1.0 / static_cast<double>(outcut.card[c])));
        }
    }
    std::vector<std::size_t> cond{B};
    if (with_context) cond.push_back(V);
    if (!d_separated(outcut, T, Y, cond)) {
        throw CriterionError("backdoor: open back-door path from T to Y given {B" +
                             std::string(with_context ? ", V" : "") + "}");
    }
}

Distribution backdoor_formula(const DiscreteScm& scm, int v_or_neg, std::size_t t) {
    const Distribution p_b = marginal(scm, B);
    std::vector<double> acc(scm.card[Y], 0.0);
    for (std::size_t b = 0; b < scm.card[B]; ++b) {
        if (p_b.p[b] == 0.0) continue;
        Evidence e = no_evidence();
        e[T] = static_cast<int>(t);
        e[B] = static_cast<int>(b);
        if (v_or_neg >= 0) e[V] = v_or_neg;
        const Distribution p_y = condition(scm, Y, e);
        for (std::size_t y = 0; y < scm.card[Y]; ++y) acc[y] += p_b.p[b] * p_y.p[y];
    }
    Distribution d{std::move(acc)};
    d.validate();
    return d;
}

} // namespace

Distribution do_t_backdoor(const DiscreteScm& scm, std::size_t v, std::size_t t) {
    check_backdoor_criterion(scm, /*with_context=*/true);
    return backdoor_formula(scm, static_cast<int>(v), t);
}

Distribution do_t_backdoor_marginal(const DiscreteScm& scm, std::size_t t) {
    check_backdoor_criterion(scm, /*with_context=*/false);
    return backdoor_formula(scm, -1, t);
}

namespace {

bool directed_path_avoiding(const DiscreteScm& scm, std::size_t from, std::size_t to,
                            std::size_t avoid) {
    std::array<bool, kNumVars> seen{};
    std::deque<std::size_t> frontier{from};
    while (!frontier.empty()) {
        std::size_t n = frontier.front();
        frontier.pop_front();
        for (std::size_t c : scm.children_of(n)) {
            if (c == avoid) continue;
            if (c == to) return true;
            if (!seen[c]) {
                seen[c] = true;
                frontier.push_back(c);
            }
        }
    }
    return false;
}

DiscreteScm cut_outgoing(const DiscreteScm& scm, std::size_t var) {
    DiscreteScm out = scm;
    for (std::size_t c = 0; c < kNumVars; ++c) {
        auto& ps = out.parents[c];
        auto it = std::find(ps.begin(), ps.end(), var);
        if (it != ps.end()) {
            ps.erase(it);
            std::size_t combos = 1;
            for (std::size_t p : ps) combos *= out.card[p];
            out.cpt[c].assign(combos,
                              std::vector<double>(out.card[c], 1.0 / static_cast<double>(out.card[c])));
        }
    }
    return out;
}

} // namespace

Distribution do_v_frontdoor(const DiscreteScm& scm, std::size_t v) {
    if (directed_path_avoiding(scm, V, Y, M)) {
        throw CriterionError("frontdoor: a directed path from V to Y bypasses the mediator M");
    }
    if (!d_separated(cut_outgoing(scm, V), V, M, {})) {
        throw CriterionError("frontdoor: unblocked back-door path between V and M");
    }
    if (!d_separated(cut_outgoing(scm, M), M, Y, {V})) {
        throw CriterionError("frontdoor: back-door path from M to Y not blocked by V");
    }

    Evidence v_only = no_evidence();
    v_only[V] = static_cast<int>(v);
    const Distribution p_m_given_v = condition(scm, M, v_only);
    const Distribution p_v = marginal(scm, V);

    std::vector<double> acc(scm.card[Y], 0.0);
    for (std::size_t m = 0; m < scm.card[M]; ++m) {
        if (p_m_given_v.p[m] == 0.0) continue;
        Evidence m_only = no_evidence();
        m_only[M] = static_cast<int>(m);
        const Distribution p_y_given_m = condition(scm, Y, m_only);
        for (std::size_t vp = 0; vp < scm.card[V]; ++vp) {
            if (p_v.p[vp] == 0.0) continue;
            Evidence e = m_only;
            e[V] = static_cast<int>(vp);
            // P(m, v') can be zero when the mediator responds
            // deterministically; the criterion guarantees Y _|_ V | M on such
            // cells, so the mediated conditional is the consistent completion.
            Distribution p_y = p_y_given_m;
            try {
                p_y = condition(scm, Y, e);
            } catch (const UndefinedConditionalError&) {
            }
            const double w = p_m_given_v.p[m] * p_v.p[vp];
            for (std::size_t y = 0; y < scm.card[Y]; ++y) acc[y] += w * p_y.p[y];
        }
    }
    Distribution d{std::move(acc)};
    d.validate();
    return d;
}

Distribution surgery_truth(const DiscreteScm& scm, std::size_t var, std::size_t value,
                           std::size_t target, const Evidence& evidence) {
    return condition(scm.intervene(var, value), target, evidence);
}

namespace {

Assignment sample_forward(const DiscreteScm& scm, const std::vector<std::size_t>& order, Rng& rng) {
    Assignment a{};
    for (std::size_t v : order) {
        const auto& row = scm.cpt[v][scm.parent_combo_index(v, a)];
        double u = rng.uniform();
        std::size_t value = row.size() - 1;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (u < row[k]) {
                value = k;
                break;
            }
            u -= row[k];
        }
        a[v] = value;
    }
    return a;
}

McEstimate finalize_counts(std::vector<std::size_t> counts, std::size_t accepted) {
    McEstimate est;
    est.samples = accepted;
    est.p.resize(counts.size(), 0.0);
    est.stderr_.resize(counts.size(), 0.0);
    if (accepted == 0) return est;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double p = static_cast<double>(counts[i]) / static_cast<double>(accepted);
        est.p[i] = p;
        est.stderr_[i] = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(accepted));
    }
    return est;
}

} // namespace

McEstimate mc_conditional(const DiscreteScm& scm, std::size_t target, const Evidence& evidence,
                          std::size_t num_samples, std::uint64_t seed) {
    Rng rng(seed);
    const auto order = scm.topo_order();
    std::vector<std::size_t> counts(scm.card[target], 0);
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < num_samples; ++i) {
        Assignment a = sample_forward(scm, order, rng);
        if (!matches(a, evidence)) continue;
        ++counts[a[target]];
        ++accepted;
    }
    return finalize_counts(std::move(counts), accepted);
}

McEstimate mc_do(const DiscreteScm& scm, std::size_t var, std::size_t value, std::size_t target,
                 std::size_t num_samples, std::uint64_t seed) {
    const DiscreteScm cut = scm.intervene(var, value);
    return mc_conditional(cut, target, no_evidence(), num_samples, seed);
}

DiscreteScm load_scm_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scm fixture: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array()) {
        throw ParseError("scm fixture: expected object with a 'variables' array");
    }
    DiscreteScm scm;
    std::array<bool, kNumVars> seen{};
    for (const auto& var : doc["variables"]) {
        if (!var.is_object() || !var.contains("name")) throw ParseError("scm fixture: variable entry missing 'name'");
        const std::size_t id = name_to_id(var["name"].get<std::string>());
        if (seen[id]) throw ParseError("scm fixture: duplicate variable '" + var_names()[id] + "'");
        seen[id] = true;
        if (!var.contains("card") || !var["card"].is_number_unsigned()) {
            throw ParseError("scm fixture: variable '" + var_names()[id] + "' missing integer 'card'");
        }
        scm.card[id] = var["card"].get<std::size_t>();
        if (var.contains("parents")) {
            for (const auto& p : var["parents"]) scm.parents[id].push_back(name_to_id(p.get<std::string>()));
        }
        if (!var.contains("cpt") || !var["cpt"].is_array()) {
            throw ParseError("scm fixture: variable '" + var_names()[id] + "' missing 'cpt' rows");
        }
        for (const auto& row : var["cpt"]) {
            std::vector<double> r;
            for (const auto& x : row) r.push_back(x.get<double>());
            scm.cpt[id].push_back(std::move(r));
        }
    }
    for (std::size_t i = 0; i < kNumVars; ++i) {
        if (!seen[i]) throw ParseError("scm fixture: variable '" + var_names()[i] + "' missing");
    }
    try {
        scm.validate();
    } catch (const InvalidArgumentError& e) {
        throw ParseError(std::string("scm fixture: ") + e.what());
    }
    return scm;
}

DiscreteScm load_scm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("scm fixture: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scm_json(buf.str());
}

std::string scm_to_json(const DiscreteScm& scm) {
    json vars = json::array();
    for (std::size_t v = 0; v < kNumVars; ++v) {
        json parents = json::array();
        for (std::size_t p : scm.parents[v]) parents.push_back(var_names()[p]);
        vars.push_back(json{{"name", var_names()[v]},
                            {"card", scm.card[v]},
                            {"parents", parents},
                            {"cpt", scm.cpt[v]}});
    }
    return json{{"variables", vars}}.dump(2);
}

namespace {

std::vector<double> random_row(std::size_t n, Rng& rng) {
    std::vector<double> row(n);
    double sum = 0.0;
    for (double& v : row) {
        v = 0.1 + rng.uniform();
        sum += v;
    }
    for (double& v : row) v /= sum;
    // Renormalize exactly: fold rounding into the largest entry.
    double total = 0.0;
    for (double v : row) total += v;
    row[0] += 1.0 - total;
    return row;
}

void fill_cpt(DiscreteScm& scm, std::size_t var, Rng& rng) {
    std::size_t combos = 1;
    for (std::size_t p : scm.parents[var]) combos *= scm.card[p];
    scm.cpt[var].clear();
    for (std::size_t i = 0; i < combos; ++i) scm.cpt[var].push_back(random_row(scm.card[var], rng));
}

} // namespace

DiscreteScm make_random_scm(ScmFamily family, Rng& rng, std::size_t max_card) {
    const auto pick_card = [&](std::size_t lo) {
        return lo + rng.uniform_index(max_card - lo + 1);
    };
    DiscreteScm scm;
    if (family == ScmFamily::backdoor) {
        scm.card[B] = pick_card(2);
        scm.card[Z] = pick_card(1);
        scm.card[V] = pick_card(2);
        scm.card[T] = pick_card(2);
        scm.card[M] = 1;
        scm.card[Y] = pick_card(2);
        scm.parents[T] = {B};
        scm.parents[V] = {};
        if (scm.card[Z] > 1 && rng.uniform() < 0.7) scm.parents[V].push_back(Z);
        scm.parents[Y] = {B, T};
        if (scm.card[Z] > 1 && rng.uniform() < 0.7) scm.parents[Y].push_back(Z);
        if (rng.uniform() < 0.7) scm.parents[Y].push_back(V);
    } else {
        scm.card[B] = pick_card(1);
        scm.card[Z] = pick_card(2);
        scm.card[V] = pick_card(2);
        scm.card[T] = pick_card(1);
        scm.card[M] = pick_card(2);
        scm.card[Y] = pick_card(2);
        scm.parents[V] = {Z};
        scm.parents[M] = {V};
        scm.parents[Y] = {Z, M};
        if (scm.card[B] > 1 && rng.uniform() < 0.5) scm.parents[T] = {B};
        if (scm.card[T] > 1 && rng.uniform() < 0.5) scm.parents[Y].push_back(T);
        if (scm.card[B] > 1 && rng.uniform() < 0.5) scm.parents[Y].push_back(B);
    }
    for (std::size_t v = 0; v < kNumVars; ++v) fill_cpt(scm, v, rng);
    scm.validate();
    return scm;
}

DiscreteScm make_violating_scm(ScmFamily family, Rng& rng) {
    DiscreteScm scm = make_random_scm(family, rng);
    if (family == ScmFamily::backdoor) {
        // B -> V opens a dependency between B and V under do(T).
        if (scm.card[V] < 2) scm.card[V] = 2;
        scm.parents[V].push_back(B);
        fill_cpt(scm, V, rng);
    } else {
        // Direct V -> Y bypasses the mediator.
        scm.parents[Y].push_back(V);
        fill_cpt(scm, Y, rng);
    }
    scm.validate();
    return scm;
}

} // namespace dcl::scm
