#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nez/grammar.hpp"

namespace nez {

/// Truth value of each parsing condition.
using ConditionAssignment = std::map<std::string, bool>;

/// Every condition name used by an <if> or <on> anywhere in `g`.
std::set<std::string> collect_conditions(const Grammar& g);

/// Rewrites a grammar with parsing conditions into an equivalent grammar
/// without them. Each production A is instantiated once per assignment of
/// the conditions its expansion actually reads; the instance where all of
/// them are false keeps the name A, others are named A__c1__c2 after the
/// conditions that are true.
class ConditionEliminator {
public:
    explicit ConditionEliminator(const Grammar& g);

    /// Conditions whose value can change how production `name` parses.
    const std::set<std::string>& dependencies(std::string_view name) const;

    /// Name of the instance of `production` under `x` (only the production's
    /// dependencies are consulted).
    std::string instance_name(std::string_view production, const ConditionAssignment& x);

    /// The conversion function: nonterminals become instances, <if> becomes ''
    /// or !'', <on> re-converts its body under the updated assignment. Any
    /// instance referenced is queued for emission by `eliminate`.
    ExprPtr convert(const ExprPtr& e, const ConditionAssignment& x);

    /// Instantiates everything reachable from the start production under the
    /// all-false assignment, unifies identical instances, and returns the
    /// condition-free grammar.
    Grammar eliminate();

private:
    struct Instance {
        std::string production;
        ConditionAssignment assignment;
        std::string name;
    };

    std::set<std::string> free_conditions(const Expr& e) const;
    ConditionAssignment restrict_to(std::string_view production, const ConditionAssignment& x) const;

    const Grammar& g_;
    std::unordered_map<std::string, std::set<std::string>> deps_;
    std::vector<Instance> instances_;
    std::map<std::pair<std::string, ConditionAssignment>, std::size_t> instance_index_;
    std::set<std::string> used_names_;
};

ExprPtr f_convert(const Grammar& g, const ExprPtr& e, const ConditionAssignment& x);
Grammar eliminate_conditions(const Grammar& g);

/// Removes branches made dead by constant conditions: '' and !'' are
/// propagated through sequences, choices, predicates and wrappers. The result
/// accepts the same inputs and builds the same trees.
ExprPtr simplify_constants(const ExprPtr& e);

/// Boolean condition state for evaluating <if>/<on> directly. All conditions
/// start false; `set` returns the previous value so callers restore it when
/// the <on> scope ends.
class ConditionStore {
public:
    bool get(std::string_view name) const;
    bool set(std::string_view name, bool value);
    void restore(std::string_view name, bool previous) { set(name, previous); }

private:
    std::map<std::string, bool, std::less<>> values_;
};

} // namespace nez
