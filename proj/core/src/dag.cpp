#include "lsdgnn/dag.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_map>

namespace lsdgnn {

Omega Omega::bounded(std::size_t value) {
  if (value < 1) {
    throw ConfigError("omega: bound must be at least 1");
  }
  return Omega(false, value);
}

Omega Omega::unbounded() { return Omega(true, 0); }

Omega Omega::parse(const std::string& text) {
  if (text == "unbounded") return unbounded();
  std::size_t value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("omega: expected a positive integer or 'unbounded', got '" +
                      text + "'");
  }
  return bounded(value);
}

std::size_t Omega::value() const {
  if (unbounded_) {
    throw ContractError("omega: value() called on unbounded");
  }
  return value_;
}

std::string Omega::str() const {
  return unbounded_ ? "unbounded" : std::to_string(value_);
}

ConversationDAG build_dag(const Conversation& conversation, Omega omega) {
  const std::size_t n = conversation.utterances.size();
  if (n == 0) {
    throw DataError("build_dag: conversation '" + conversation.id +
                    "' is empty");
  }
  for (std::size_t pos = 0; pos < n; ++pos) {
    const Utterance& u = conversation.utterances[pos];
    if (u.index != pos + 1) {
      throw FormatError("build_dag: conversation '" + conversation.id +
                        "' utterance at position " + std::to_string(pos + 1) +
                        " has index " + std::to_string(u.index) +
                        " (indices must be 1..N contiguous, no duplicates)");
    }
  }

  ConversationDAG dag;
  dag.n_nodes = n;
  dag.omega = omega;
  dag.speakers.reserve(n);
  for (const Utterance& u : conversation.utterances) {
    dag.speakers.push_back(u.speaker);
  }

  // Positions of each speaker's earlier utterances, ascending. The scan's
  // stopping point for target i is the omega-th most recent same-speaker
  // position, so the whole build is linear in the output size.
  std::unordered_map<std::string, std::vector<std::size_t>> seen;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::string& speaker = dag.speakers[i - 1];
    auto& own = seen[speaker];
    if (i >= 2) {
      std::size_t cutoff = 1;
      if (!omega.is_unbounded() && own.size() >= omega.value()) {
        cutoff = own[own.size() - omega.value()];
      }
      for (std::size_t j = cutoff; j < i; ++j) {
        dag.edges.push_back(
            {j, i, dag.speakers[j - 1] == speaker ? 1 : 0});
      }
    }
    own.push_back(i);
  }
  // Targets grow and sources ascend within each target, so the edge list is
  // already ordered by (target, source).
  return dag;
}

std::vector<std::pair<std::size_t, int>> predecessors(
    const ConversationDAG& dag, std::size_t i) {
  if (i < 1 || i > dag.n_nodes) {
    throw IndexError("predecessors: node " + std::to_string(i) +
                     " out of range 1.." + std::to_string(dag.n_nodes));
  }
  Edge lo{0, i, 0};
  Edge hi{0, i + 1, 0};
  auto first = std::lower_bound(dag.edges.begin(), dag.edges.end(), lo);
  auto last = std::lower_bound(dag.edges.begin(), dag.edges.end(), hi);
  std::vector<std::pair<std::size_t, int>> result;
  result.reserve(static_cast<std::size_t>(last - first));
  for (auto it = first; it != last; ++it) {
    result.emplace_back(it->source, it->relation);
  }
  return result;
}

std::vector<std::string> validate_dag(const ConversationDAG& dag) {
  std::vector<std::string> violations;
  auto edge_str = [](const Edge& e) {
    return "(" + std::to_string(e.source) + "," + std::to_string(e.target) +
           "," + std::to_string(e.relation) + ")";
  };

  const bool have_speakers = dag.speakers.size() == dag.n_nodes;
  if (!have_speakers) {
    violations.push_back("speaker list has " +
                         std::to_string(dag.speakers.size()) +
                         " entries for " + std::to_string(dag.n_nodes) +
                         " nodes");
  }

  std::unordered_map<std::size_t, std::size_t> same_speaker_in;
  std::vector<Edge> sorted = dag.edges;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    if (sorted[k].source == sorted[k + 1].source &&
        sorted[k].target == sorted[k + 1].target) {
      violations.push_back("duplicate edge " + edge_str(sorted[k]));
    }
  }

  for (const Edge& e : dag.edges) {
    if (e.source < 1 || e.target < 1 || e.source > dag.n_nodes ||
        e.target > dag.n_nodes) {
      violations.push_back("edge " + edge_str(e) + ": endpoint out of range");
      continue;
    }
    if (e.source >= e.target) {
      violations.push_back("edge " + edge_str(e) +
                           ": source < target violated");
    }
    if (e.relation != 0 && e.relation != 1) {
      violations.push_back("edge " + edge_str(e) + ": relation not in {0,1}");
    }
    if (e.target == 1) {
      violations.push_back("edge " + edge_str(e) +
                           ": node 1 must have no incoming edges");
    }
    if (have_speakers && (e.relation == 0 || e.relation == 1)) {
      const bool same = dag.speakers[e.source - 1] == dag.speakers[e.target - 1];
      if (same != (e.relation == 1)) {
        violations.push_back("edge " + edge_str(e) +
                             ": relation/speaker mismatch");
      }
      if (same) ++same_speaker_in[e.target];
    }
  }

  if (!dag.omega.is_unbounded()) {
    for (const auto& [target, count] : same_speaker_in) {
      if (count > dag.omega.value()) {
        violations.push_back("node " + std::to_string(target) + " has " +
                             std::to_string(count) +
                             " same-speaker sources, omega is " +
                             dag.omega.str());
      }
    }
  }
  std::sort(violations.begin(), violations.end());
  return violations;
}

std::string format_edge_list(const ConversationDAG& dag) {
  std::vector<Edge> sorted = dag.edges;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream os;
  for (const Edge& e : sorted) {
    os << e.source << ' ' << e.target << ' ' << e.relation << '\n';
  }
  return os.str();
}

}  // namespace lsdgnn
