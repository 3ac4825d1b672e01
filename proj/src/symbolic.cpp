#include "snsr/symbolic.hpp"

#include <algorithm>
#include <cmath>

#include "snsr/errors.hpp"
#include "snsr/text.hpp"

namespace snsr {

std::string_view to_string(ThresholdMode mode) noexcept {
  return mode == ThresholdMode::hard ? "hard" : "logistic";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "hard") return ThresholdMode::hard;
  if (text == "logistic" || text == "soft") return ThresholdMode::logistic;
  fail(ErrorCode::parse_error, "unknown threshold mode '" + std::string(text) + "'");
}

void ThresholdConfig::validate(std::size_t node_count) const {
  if (tau.size() != 1 && tau.size() != node_count) {
    fail(ErrorCode::shape_mismatch, "threshold vector has " + std::to_string(tau.size()) +
                                        " entries for " + std::to_string(node_count) + " nodes");
  }
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!std::isfinite(tau[i])) fail(ErrorCode::non_finite_value, "threshold is not finite", i);
  }
  if (mode == ThresholdMode::logistic && !(alpha > 0.0 && std::isfinite(alpha))) {
    fail(ErrorCode::bad_params, "logistic threshold needs a finite alpha > 0");
  }
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

PredicateSet hard_threshold(const GraphSignal& y, const ThresholdConfig& cfg) {
  cfg.validate(y.size());
  PredicateSet p;
  p.values.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    p.values[i] = y.values[static_cast<Eigen::Index>(i)] > cfg.tau_at(i) ? 1.0 : 0.0;
  }
  return p;
}

PredicateSet soft_threshold(const GraphSignal& y, const ThresholdConfig& cfg) {
  cfg.validate(y.size());
  if (!(cfg.alpha > 0.0)) fail(ErrorCode::bad_params, "logistic threshold needs alpha > 0");
  PredicateSet p;
  p.soft = true;
  p.values.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    p.values[i] = sigmoid(cfg.alpha * (y.values[static_cast<Eigen::Index>(i)] - cfg.tau_at(i)));
  }
  return p;
}

AtomId KnowledgeBase::declare(std::string_view name) {
  if (name.empty()) fail(ErrorCode::parse_error, "atom name is empty");
  const std::string key(name);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const AtomId id = names_.size();
  names_.push_back(key);
  index_.emplace(key, id);
  return id;
}

std::optional<AtomId> KnowledgeBase::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

AtomId KnowledgeBase::require(std::string_view name) const {
  if (auto a = find(name)) return *a;
  fail(ErrorCode::undeclared_atom, "atom '" + std::string(name) + "' is not declared");
}

void KnowledgeBase::check(AtomId a) const {
  if (a >= names_.size()) fail(ErrorCode::undeclared_atom, "atom id " + std::to_string(a) + " is not declared", a);
}

void KnowledgeBase::add_fact(AtomId atom) {
  check(atom);
  auto it = std::lower_bound(facts_.begin(), facts_.end(), atom);
  if (it == facts_.end() || *it != atom) facts_.insert(it, atom);
}

bool KnowledgeBase::is_fact(AtomId a) const {
  return std::binary_search(facts_.begin(), facts_.end(), a);
}

std::size_t KnowledgeBase::add_clause(AtomId head, std::vector<AtomId> body) {
  check(head);
  for (AtomId a : body) check(a);
  std::sort(body.begin(), body.end());
  body.erase(std::unique(body.begin(), body.end()), body.end());
  clauses_.push_back({head, std::move(body)});
  return clauses_.size() - 1;
}

void KnowledgeBase::add_exclusive(AtomId a, AtomId b) {
  check(a);
  check(b);
  if (a == b) fail(ErrorCode::bad_params, "atom '" + names_[a] + "' cannot exclude itself");
  exclusive_.emplace_back(std::min(a, b), std::max(a, b));
}

void KnowledgeBase::validate() const {
  for (AtomId f : facts_) check(f);
  for (const auto& c : clauses_) {
    check(c.head);
    for (AtomId a : c.body) check(a);
  }
  for (const auto& [a, b] : exclusive_) {
    check(a);
    check(b);
  }
}

KnowledgeBase parse_kb(std::string_view text) {
  KnowledgeBase kb;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::strip_comment(raw);
    if (line.empty()) continue;
    const std::string ctx = "KB line " + std::to_string(line_no);
    const auto tok = text::split_ws(line);
    auto need = [&](std::string_view name) {
      auto a = kb.find(name);
      if (!a) fail(ErrorCode::undeclared_atom, ctx + ": atom '" + std::string(name) + "' is not declared");
      return *a;
    };
    if (tok[0] == "atom") {
      if (tok.size() != 2) fail(ErrorCode::parse_error, ctx + ": expected 'atom <name>'");
      kb.declare(tok[1]);
    } else if (tok[0] == "fact") {
      if (tok.size() != 2) fail(ErrorCode::parse_error, ctx + ": expected 'fact <name>'");
      kb.add_fact(need(tok[1]));
    } else if (tok[0] == "exclusive") {
      if (tok.size() != 3) fail(ErrorCode::parse_error, ctx + ": expected 'exclusive <a> <b>'");
      kb.add_exclusive(need(tok[1]), need(tok[2]));
    } else if (tok[0] == "clause") {
      const std::string_view rest = text::trim(line.substr(6));
      const auto sep = rest.find(":-");
      if (sep == std::string_view::npos) fail(ErrorCode::parse_error, ctx + ": expected 'clause <head> :- <body>'");
      const std::string_view head = text::trim(rest.substr(0, sep));
      if (head.empty() || text::split_ws(head).size() != 1) {
        fail(ErrorCode::parse_error, ctx + ": clause needs exactly one head atom");
      }
      std::vector<AtomId> body;
      const std::string_view body_text = text::trim(rest.substr(sep + 2));
      if (!body_text.empty()) {
        for (auto cell : text::split(body_text, ',')) {
          cell = text::trim(cell);
          if (cell.empty()) fail(ErrorCode::parse_error, ctx + ": empty body atom");
          body.push_back(need(cell));
        }
      }
      kb.add_clause(need(head), std::move(body));
    } else {
      fail(ErrorCode::parse_error, ctx + ": unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  return kb;
}

std::string format_kb(const KnowledgeBase& kb) {
  std::string out;
  for (const auto& n : kb.atoms()) out += "atom " + n + "\n";
  for (AtomId f : kb.facts()) out += "fact " + kb.name(f) + "\n";
  for (const auto& c : kb.clauses()) {
    out += "clause " + kb.name(c.head) + " :-";
    for (std::size_t i = 0; i < c.body.size(); ++i) out += (i ? ", " : " ") + kb.name(c.body[i]);
    out += "\n";
  }
  for (const auto& [a, b] : kb.exclusive()) out += "exclusive " + kb.name(a) + " " + kb.name(b) + "\n";
  return out;
}

KnowledgeBase load_kb(const std::filesystem::path& path) { return parse_kb(text::read_file(path)); }

namespace {

struct Justification {
  std::size_t clause;
  bool set = false;
};

void collect_steps(const KnowledgeBase& kb, const std::vector<Justification>& why, AtomId a,
                   std::vector<bool>& visited, std::vector<ProofStep>& out) {
  if (visited[a] || !why[a].set) return;
  visited[a] = true;
  const Clause& c = kb.clauses()[why[a].clause];
  for (AtomId p : c.body) collect_steps(kb, why, p, visited, out);
  out.push_back({why[a].clause, c.body, a});
}

}  // namespace

ChainResult forward_chain(const KnowledgeBase& kb) {
  const std::size_t n = kb.atom_count();
  const auto& clauses = kb.clauses();
  ChainResult res;
  res.holds.assign(n, false);

  std::vector<std::vector<std::size_t>> watchers(n);
  std::vector<std::size_t> missing(clauses.size());
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    missing[c] = clauses[c].body.size();
    for (AtomId a : clauses[c].body) watchers[a].push_back(c);
  }

  std::vector<Justification> why(n);
  std::vector<AtomId> frontier;
  for (AtomId f : kb.facts()) {
    res.holds[f] = true;
    res.closure.push_back(f);
    frontier.push_back(f);
  }
  auto fire = [&](std::size_t c, std::vector<AtomId>& next) {
    const AtomId h = clauses[c].head;
    if (res.holds[h]) return;
    res.holds[h] = true;
    why[h] = {c, true};
    res.closure.push_back(h);
    next.push_back(h);
  };

  // Unconditional clauses fire in the first round.
  std::vector<AtomId> next;
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    if (missing[c] == 0) fire(c, next);
  }
  frontier.insert(frontier.end(), next.begin(), next.end());
  if (!next.empty()) res.rounds = 1;

  while (!frontier.empty()) {
    next.clear();
    for (AtomId a : frontier) {
      for (std::size_t c : watchers[a]) {
        if (--missing[c] == 0) fire(c, next);
      }
    }
    if (!next.empty()) ++res.rounds;
    frontier.swap(next);
  }

  std::vector<bool> visited(n);
  for (AtomId a : res.closure) {
    ProofTrace t{a, {}};
    std::fill(visited.begin(), visited.end(), false);
    collect_steps(kb, why, a, visited, t.steps);
    res.traces.emplace(a, std::move(t));
  }
  return res;
}

bool replay_trace(const KnowledgeBase& kb, const ProofTrace& trace) {
  if (trace.atom >= kb.atom_count()) return false;
  std::vector<bool> known(kb.atom_count(), false);
  for (AtomId f : kb.facts()) known[f] = true;
  for (const auto& step : trace.steps) {
    if (step.clause >= kb.clauses().size()) return false;
    const Clause& c = kb.clauses()[step.clause];
    if (c.head != step.derived || c.body != step.premises) return false;
    for (AtomId p : c.body) {
      if (!known[p]) return false;
    }
    known[c.head] = true;
  }
  return known[trace.atom];
}

KnowledgeBase bind_predicates(const PredicateSet& p, const KnowledgeBase& kb,
                              const NodeAtomMap& mapping) {
  if (mapping.size() != p.size()) {
    fail(ErrorCode::shape_mismatch, "node-atom map has " + std::to_string(mapping.size()) +
                                        " entries for " + std::to_string(p.size()) + " predicates");
  }
  KnowledgeBase out = kb;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p.holds(i)) continue;
    if (!mapping[i]) fail(ErrorCode::unmapped_node, "node " + std::to_string(i) + " is true but maps to no atom", i);
    out.add_fact(*mapping[i]);
  }
  return out;
}

NodeAtomMap map_by_label(const std::vector<std::string>& labels, const KnowledgeBase& kb) {
  NodeAtomMap m(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = kb.find(labels[i]);
  return m;
}

std::vector<std::pair<AtomId, AtomId>> detect_conflicts(const KnowledgeBase& kb,
                                                        const ChainResult& chain) {
  std::vector<std::pair<AtomId, AtomId>> out;
  for (const auto& [a, b] : kb.exclusive()) {
    if (chain.contains(a) && chain.contains(b)) out.emplace_back(a, b);
  }
  return out;
}

std::string format_traces(const KnowledgeBase& kb, const ChainResult& chain) {
  std::string out;
  for (AtomId a : chain.closure) {
    const ProofTrace& t = chain.traces.at(a);
    if (t.steps.empty()) {
      out += kb.name(a) + " (fact)\n";
      continue;
    }
    out += kb.name(a) + "\n";
    for (const auto& s : t.steps) {
      out += "  [c" + std::to_string(s.clause) + "] " + kb.name(s.derived) + " :-";
      for (std::size_t i = 0; i < s.premises.size(); ++i) out += (i ? ", " : " ") + kb.name(s.premises[i]);
      out += "\n";
    }
  }
  return out;
}

}  // namespace snsr
