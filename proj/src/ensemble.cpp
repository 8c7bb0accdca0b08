#include "forge/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/error.hpp"

namespace forge::ensemble {

namespace {

void check_members(std::span<const ProbabilityMatrix> members) {
  if (members.size() < 2) {
    throw Error(ErrorKind::Precondition,
                "an ensemble needs at least two members, got " +
                    std::to_string(members.size()));
  }
  const std::size_t n = members[0].rows();
  const std::size_t c = members[0].cols();
  if (c == 0) throw Error(ErrorKind::Precondition, "members have no classes");
  for (const auto& m : members) {
    if (m.rows() != n || m.cols() != c) {
      throw Error(ErrorKind::Precondition,
                  "member '" + m.producer() + "' has shape " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      ", expected " + std::to_string(n) + "x" + std::to_string(c));
    }
    m.validate();
  }
}

std::string joined_producers(std::span<const ProbabilityMatrix> members) {
  std::string out;
  for (const auto& m : members) {
    if (!out.empty()) out += '+';
    out += m.producer();
  }
  return out;
}

}  // namespace

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::Soft: return "soft";
    case Rule::Max: return "max";
    case Rule::Hard: return "hard";
    case Rule::Stack: return "stack";
  }
  return "unknown";
}

Rule rule_from_name(std::string_view name) {
  for (Rule r : {Rule::Soft, Rule::Max, Rule::Hard, Rule::Stack}) {
    if (rule_name(r) == name) return r;
  }
  throw Error(ErrorKind::Usage, "unknown ensemble rule '" + std::string(name) +
                                    "' (expected soft, max, hard or stack)");
}

std::string_view topology_name(Topology topology) {
  switch (topology) {
    case Topology::EM1: return "EM1";
    case Topology::EM2: return "EM2";
    case Topology::EM3: return "EM3";
    case Topology::EM4: return "EM4";
  }
  return "unknown";
}

Topology topology_from_name(std::string_view name) {
  for (Topology t : {Topology::EM1, Topology::EM2, Topology::EM3, Topology::EM4}) {
    if (topology_name(t) == name) return t;
  }
  throw Error(ErrorKind::Usage, "unknown topology '" + std::string(name) +
                                    "' (expected EM1, EM2, EM3 or EM4)");
}

std::vector<std::string_view> topology_roles(Topology topology) {
  switch (topology) {
    case Topology::EM1: return {kRoleMlp, kRoleCnn};
    case Topology::EM2: return {kRoleMlp, kRoleLstm};
    case Topology::EM3: return {kRoleCnn, kRoleLstm};
    case Topology::EM4: return {kRoleMlp, kRoleCnn, kRoleLstm};
  }
  return {};
}

EnsembleSpec build_em(Topology topology, Rule rule,
                      const MatrixRegistry& registry) {
  EnsembleSpec spec;
  spec.topology = topology;
  spec.rule = rule;
  const auto roles = topology_roles(topology);
  if (rule == Rule::Hard && roles.size() % 2 == 0) {
    throw Error(ErrorKind::Precondition,
                "hard voting requires an odd number of members; " +
                    std::string(topology_name(topology)) + " has " +
                    std::to_string(roles.size()));
  }
  for (auto role : roles) {
    const auto it = registry.find(role);
    if (it == registry.end()) {
      throw Error(ErrorKind::Precondition,
                  std::string(topology_name(topology)) + " requires member '" +
                      std::string(role) + "', which is missing");
    }
    spec.roles.emplace_back(role);
    spec.members.push_back(it->second.producer().empty() ? std::string(role)
                                                         : it->second.producer());
    spec.member_weights.push_back(1.0);
  }
  return spec;
}

std::vector<ProbabilityMatrix> select_members(const EnsembleSpec& spec,
                                              const MatrixRegistry& registry) {
  std::vector<ProbabilityMatrix> out;
  for (const auto& role : spec.roles) {
    const auto it = registry.find(role);
    if (it == registry.end()) {
      throw Error(ErrorKind::Precondition, "member '" + role + "' is missing");
    }
    out.push_back(it->second);
  }
  return out;
}

SoftVoteResult soft_vote(std::span<const ProbabilityMatrix> members,
                         std::span<const double> weights) {
  check_members(members);
  const std::size_t m = members.size();
  if (!weights.empty() && weights.size() != m) {
    throw Error(ErrorKind::Precondition, "expected one weight per member");
  }
  double weight_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = weights.empty() ? 1.0 : weights[j];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::Precondition, "member weights must be positive");
    }
    weight_sum += w;
  }

  const std::size_t n = members[0].rows();
  const std::size_t c = members[0].cols();
  ProbabilityMatrix::Storage avg(static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        acc += (weights.empty() ? 1.0 : weights[j]) * members[j](i, k);
      }
      avg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          acc / weight_sum;
    }
  }
  SoftVoteResult result{{}, ProbabilityMatrix(std::move(avg),
                                              "soft(" + joined_producers(members) + ")")};
  result.labels = result.averaged.argmax_labels();
  return result;
}

std::vector<int> max_value(std::span<const ProbabilityMatrix> members) {
  check_members(members);
  const std::size_t n = members[0].rows();
  const std::size_t c = members[0].cols();
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int best_class = 0;
    for (std::size_t k = 0; k < c; ++k) {
      for (const auto& member : members) {
        if (member(i, k) > best) {
          best = member(i, k);
          best_class = static_cast<int>(k);
        }
      }
    }
    labels[i] = best_class;
  }
  return labels;
}

std::vector<int> hard_vote(std::span<const std::vector<int>> member_votes,
                           std::span<const ProbabilityMatrix> fallback) {
  const std::size_t m = member_votes.size();
  if (m < 3 || m % 2 == 0) {
    throw Error(ErrorKind::Precondition,
                "hard voting requires an odd number of members (at least 3), got " +
                    std::to_string(m));
  }
  if (fallback.size() != m) {
    throw Error(ErrorKind::Precondition,
                "hard voting needs one probability matrix per member for "
                "tie fallback");
  }
  check_members(fallback);
  const std::size_t n = fallback[0].rows();
  const std::size_t c = fallback[0].cols();
  for (const auto& votes : member_votes) {
    if (votes.size() != n) {
      throw Error(ErrorKind::Precondition, "member vote vectors differ in length");
    }
    for (int v : votes) {
      if (v < 0 || static_cast<std::size_t>(v) >= c) {
        throw Error(ErrorKind::Precondition,
                    "vote " + std::to_string(v) + " outside the class range");
      }
    }
  }

  std::vector<int> labels(n);
  std::vector<int> soft_labels;
  std::vector<std::size_t> counts(c);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& votes : member_votes) ++counts[static_cast<std::size_t>(votes[i])];
    std::size_t top = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (counts[k] > counts[top]) top = k;
    }
    const auto holders = std::count(counts.begin(), counts.end(), counts[top]);
    if (holders == 1) {
      labels[i] = static_cast<int>(top);
      continue;
    }
    if (soft_labels.empty()) soft_labels = soft_vote(fallback).labels;
    labels[i] = soft_labels[i];
  }
  return labels;
}

std::vector<int> hard_vote(std::span<const ProbabilityMatrix> members) {
  std::vector<std::vector<int>> votes;
  votes.reserve(members.size());
  for (const auto& m : members) votes.push_back(m.argmax_labels());
  return hard_vote(votes, members);
}

Eigen::MatrixXd stack_features(std::span<const ProbabilityMatrix> members) {
  if (members.empty()) return {};
  const auto n = static_cast<Eigen::Index>(members[0].rows());
  const auto c = static_cast<Eigen::Index>(members[0].cols());
  Eigen::MatrixXd z(n, c * static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].rows() != members[0].rows() ||
        members[j].cols() != members[0].cols()) {
      throw Error(ErrorKind::Precondition,
                  "member '" + members[j].producer() + "' shape mismatch");
    }
    z.middleCols(static_cast<Eigen::Index>(j) * c, c) = members[j].values();
  }
  return z;
}

}  // namespace forge::ensemble
