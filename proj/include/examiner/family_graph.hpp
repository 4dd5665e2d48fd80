#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "examiner/call_record.hpp"

namespace examiner {

// Union by size with path compression over dense indices.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n = 0);

  std::size_t add();
  std::size_t find(std::size_t x);
  // Returns false when x and y were already in the same set.
  bool unite(std::size_t x, std::size_t y);
  std::size_t set_size(std::size_t x) { return size_[find(x)]; }
  std::size_t size() const noexcept { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

std::string customer_node(std::string_view customer_id);
std::string phone_node(std::string_view phone);

struct FamilyInfo {
  std::string id;  // smallest member node id
  std::size_t customers = 0;
  std::size_t phones = 0;
  std::size_t calls = 0;
};

// Families of customer identifiers connected through shared phone numbers.
// Immutable once built.
class FamilyPartition {
 public:
  FamilyPartition() = default;

  // Family id of a call; nullopt for calls that were not part of the build.
  std::optional<std::string_view> family_of_call(std::string_view call_id) const;
  // Family id of a namespaced node ("C:<id>" or "P:<phone>").
  std::optional<std::string_view> family_of_node(std::string_view node) const;

  std::size_t family_count() const noexcept { return families_.size(); }
  std::size_t node_count() const noexcept { return node_family_.size(); }
  const std::vector<FamilyInfo>& families() const noexcept { return families_; }
  const FamilyInfo& info(std::string_view family_id) const;

  // (call_id, family_id) in call order of the build input.
  const std::vector<std::pair<std::string, std::string>>& assignments() const noexcept {
    return assignments_;
  }

 private:
  friend FamilyPartition build_partition(std::span<const CallRecord> calls);

  std::unordered_map<std::string, std::string> call_family_;
  std::unordered_map<std::string, std::string> node_family_;
  std::unordered_map<std::string, std::size_t> family_index_;
  std::vector<FamilyInfo> families_;
  std::vector<std::pair<std::string, std::string>> assignments_;
};

// Unions each call's customer node with its phone node. Calls without any
// identifier are skipped.
FamilyPartition build_partition(std::span<const CallRecord> calls);

// Families whose distinct customer count exceeds `threshold`.
std::set<std::string> flag_agencies(const FamilyPartition& partition, std::size_t threshold);

struct CoverageStats {
  std::size_t calls = 0;
  std::size_t with_customer_id = 0;
  std::size_t with_family = 0;
  double customer_id_fraction = 0.0;
  double family_fraction = 0.0;
  // Relative increase in usable calls from family resolution.
  double gain = 0.0;
};

CoverageStats coverage(std::span<const CallRecord> calls, const FamilyPartition& partition);

void write_family_assignments(std::ostream& out, const FamilyPartition& partition, char delimiter);

}  // namespace examiner
