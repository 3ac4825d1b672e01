#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "snsr/spectral.hpp"

namespace snsr {

enum class ThresholdMode { hard, logistic };

std::string_view to_string(ThresholdMode mode) noexcept;
ThresholdMode parse_threshold_mode(std::string_view text);

/// tau holds one global value or one value per node.
struct ThresholdConfig {
  ThresholdMode mode = ThresholdMode::hard;
  std::vector<double> tau{0.5};
  double alpha = 1.0;

  double tau_at(std::size_t i) const { return tau.size() == 1 ? tau[0] : tau[i]; }
  void validate(std::size_t node_count) const;
};

/// 1 / (1 + exp(-z)) without overflow for large |z|.
double sigmoid(double z) noexcept;

struct PredicateSet {
  std::vector<double> values;  // 0/1 when hard, probabilities when soft
  bool soft = false;

  std::size_t size() const noexcept { return values.size(); }
  /// Hard value, or the soft value cut at 0.5 (ties are false).
  bool holds(std::size_t i) const { return values[i] > 0.5; }
};

/// p_i = [y_i > tau_i]. Ties are false.
PredicateSet hard_threshold(const GraphSignal& y, const ThresholdConfig& cfg);
/// p_i = sigmoid(alpha (y_i - tau_i))
PredicateSet soft_threshold(const GraphSignal& y, const ThresholdConfig& cfg);

using AtomId = std::size_t;

struct Clause {
  AtomId head = 0;
  std::vector<AtomId> body;  // sorted, unique; empty body means unconditional
};

/// Propositional Horn knowledge base.
class KnowledgeBase {
 public:
  AtomId declare(std::string_view name);
  std::optional<AtomId> find(std::string_view name) const;
  AtomId require(std::string_view name) const;  // throws UndeclaredAtom

  void add_fact(AtomId atom);
  std::size_t add_clause(AtomId head, std::vector<AtomId> body);
  void add_exclusive(AtomId a, AtomId b);

  std::size_t atom_count() const noexcept { return names_.size(); }
  const std::string& name(AtomId a) const { return names_.at(a); }
  const std::vector<std::string>& atoms() const noexcept { return names_; }
  const std::vector<AtomId>& facts() const noexcept { return facts_; }  // sorted, unique
  bool is_fact(AtomId a) const;
  const std::vector<Clause>& clauses() const noexcept { return clauses_; }
  const std::vector<std::pair<AtomId, AtomId>>& exclusive() const noexcept { return exclusive_; }

  void validate() const;

 private:
  void check(AtomId a) const;

  std::vector<std::string> names_;
  std::unordered_map<std::string, AtomId> index_;
  std::vector<AtomId> facts_;
  std::vector<Clause> clauses_;
  std::vector<std::pair<AtomId, AtomId>> exclusive_;
};

// KB text format, one directive per line:
//   atom <name>
//   fact <name>
//   clause <head> :- <a>, <b>, ...
//   exclusive <a> <b>
// Atoms must be declared before use.
KnowledgeBase parse_kb(std::string_view text);
std::string format_kb(const KnowledgeBase& kb);
KnowledgeBase load_kb(const std::filesystem::path& path);

struct ProofStep {
  std::size_t clause = 0;
  std::vector<AtomId> premises;
  AtomId derived = 0;
};

/// Steps in dependency order; the last step derives `atom`. Facts have no
/// steps.
struct ProofTrace {
  AtomId atom = 0;
  std::vector<ProofStep> steps;
};

struct ChainResult {
  std::vector<bool> holds;        // indexed by atom
  std::vector<AtomId> closure;    // in derivation order, facts first
  std::map<AtomId, ProofTrace> traces;
  std::size_t rounds = 0;         // rounds that derived something new

  bool contains(AtomId a) const { return a < holds.size() && holds[a]; }
};

/// Least fixed point of the clauses over the facts. Counter-based
/// semi-naive evaluation: each clause is revisited only when one of its
/// premises becomes true.
ChainResult forward_chain(const KnowledgeBase& kb);

/// Re-derives the trace's atom from kb's facts alone.
bool replay_trace(const KnowledgeBase& kb, const ProofTrace& trace);

/// Node -> atom. Nodes without an atom must not be predicated true.
using NodeAtomMap = std::vector<std::optional<AtomId>>;

/// kb plus one fact per true predicate.
KnowledgeBase bind_predicates(const PredicateSet& p, const KnowledgeBase& kb,
                              const NodeAtomMap& mapping);

/// Maps nodes whose label names a declared atom.
NodeAtomMap map_by_label(const std::vector<std::string>& labels, const KnowledgeBase& kb);

/// Exclusive pairs with both members in the closure.
std::vector<std::pair<AtomId, AtomId>> detect_conflicts(const KnowledgeBase& kb,
                                                        const ChainResult& chain);

// Trace dump: one block per derived atom,
//   <atom>
//     [c<clause>] <head> :- <premises>
// with steps listed in replay order. Facts are listed as "<atom> (fact)".
std::string format_traces(const KnowledgeBase& kb, const ChainResult& chain);

}  // namespace snsr
