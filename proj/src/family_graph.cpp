#include "examiner/family_graph.hpp"

#include <algorithm>
#include <numeric>

#include "examiner/csv.hpp"
#include "examiner/errors.hpp"

namespace examiner {

DisjointSet::DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSet::add() {
  parent_.push_back(parent_.size());
  size_.push_back(1);
  return parent_.size() - 1;
}

std::size_t DisjointSet::find(std::size_t x) {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    std::size_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

bool DisjointSet::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (size_[x] < size_[y]) std::swap(x, y);
  parent_[y] = x;
  size_[x] += size_[y];
  return true;
}

std::string customer_node(std::string_view customer_id) { return "C:" + std::string(customer_id); }
std::string phone_node(std::string_view phone) { return "P:" + std::string(phone); }

std::optional<std::string_view> FamilyPartition::family_of_call(std::string_view call_id) const {
  auto it = call_family_.find(std::string(call_id));
  if (it == call_family_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::optional<std::string_view> FamilyPartition::family_of_node(std::string_view node) const {
  auto it = node_family_.find(std::string(node));
  if (it == node_family_.end()) return std::nullopt;
  return std::string_view(it->second);
}

const FamilyInfo& FamilyPartition::info(std::string_view family_id) const {
  auto it = family_index_.find(std::string(family_id));
  if (it == family_index_.end()) throw DataError("unknown family " + std::string(family_id));
  return families_[it->second];
}

FamilyPartition build_partition(std::span<const CallRecord> calls) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> nodes;
  DisjointSet sets;
  auto node_id = [&](std::string name) {
    auto [it, inserted] = index.emplace(name, nodes.size());
    if (inserted) {
      nodes.push_back(std::move(name));
      sets.add();
    }
    return it->second;
  };

  std::vector<std::pair<std::size_t, std::size_t>> call_node;  // (call index, node)
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const auto& c = calls[i];
    std::optional<std::size_t> cn, pn;
    if (c.customer_id) cn = node_id(customer_node(*c.customer_id));
    if (c.phone) pn = node_id(phone_node(*c.phone));
    if (cn && pn) sets.unite(*cn, *pn);
    if (cn || pn) call_node.emplace_back(i, cn ? *cn : *pn);
  }

  // Canonical id per root: the smallest member name.
  std::vector<std::size_t> canonical(nodes.size(), static_cast<std::size_t>(-1));
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    auto root = sets.find(n);
    if (canonical[root] == static_cast<std::size_t>(-1) || nodes[n] < nodes[canonical[root]]) {
      canonical[root] = n;
    }
  }

  FamilyPartition p;
  std::vector<FamilyInfo> infos;
  std::unordered_map<std::size_t, std::size_t> root_info;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    auto root = sets.find(n);
    auto [it, inserted] = root_info.emplace(root, infos.size());
    if (inserted) infos.push_back(FamilyInfo{nodes[canonical[root]], 0, 0, 0});
    auto& info = infos[it->second];
    if (nodes[n][0] == 'C') ++info.customers;
    else ++info.phones;
    p.node_family_.emplace(nodes[n], info.id);
  }
  for (auto [call, node] : call_node) {
    auto& info = infos[root_info.at(sets.find(node))];
    ++info.calls;
    p.call_family_.emplace(calls[call].call_id, info.id);
    p.assignments_.emplace_back(calls[call].call_id, info.id);
  }
  std::sort(infos.begin(), infos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < infos.size(); ++i) p.family_index_.emplace(infos[i].id, i);
  p.families_ = std::move(infos);
  return p;
}

std::set<std::string> flag_agencies(const FamilyPartition& partition, std::size_t threshold) {
  std::set<std::string> flagged;
  for (const auto& f : partition.families()) {
    if (f.customers > threshold) flagged.insert(f.id);
  }
  return flagged;
}

CoverageStats coverage(std::span<const CallRecord> calls, const FamilyPartition& partition) {
  CoverageStats s;
  s.calls = calls.size();
  for (const auto& c : calls) {
    if (c.customer_id) ++s.with_customer_id;
    if (partition.family_of_call(c.call_id)) ++s.with_family;
  }
  if (s.calls) {
    s.customer_id_fraction = static_cast<double>(s.with_customer_id) / s.calls;
    s.family_fraction = static_cast<double>(s.with_family) / s.calls;
  }
  if (s.with_customer_id) {
    s.gain = static_cast<double>(s.with_family) / s.with_customer_id - 1.0;
  }
  return s;
}

void write_family_assignments(std::ostream& out, const FamilyPartition& partition, char delimiter) {
  const std::vector<std::string> header{"call_id", "family_id"};
  csv::write_row(out, header, delimiter);
  for (const auto& [call, family] : partition.assignments()) {
    const std::vector<std::string> row{call, family};
    csv::write_row(out, row, delimiter);
  }
}

}  // namespace examiner
