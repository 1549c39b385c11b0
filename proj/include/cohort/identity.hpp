#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cohort/edit_distance.hpp"
#include "cohort/records.hpp"
#include "cohort/text.hpp"

namespace cohort {

enum class ConflictKind { NONE, DNI_DUPLICATE, ID_COLLISION, NAME_BIRTH_MATCH };

inline const char* to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::NONE: return "NONE";
    case ConflictKind::DNI_DUPLICATE: return "DNI_DUPLICATE";
    case ConflictKind::ID_COLLISION: return "ID_COLLISION";
    case ConflictKind::NAME_BIRTH_MATCH: return "NAME_BIRTH_MATCH";
  }
  return "?";
}

struct ConflictEvidence {
  std::string id_a;
  std::string id_b;
  double similarity = 0.0;
  std::string shared_key;
};

struct ConflictCluster {
  std::vector<std::string> member_ids;  // sorted
  ConflictKind kind = ConflictKind::NONE;
  std::vector<ConflictEvidence> evidence;
  bool pure_dni = false;       // every edge is a shared-DNI edge
  bool names_complete = false; // all members carry a usable name
};

// Earliest-ID ordering: numeric when both sides parse as integers, else
// lexicographic. Clusters mixing the two fall back to lexicographic.
inline bool id_less(const std::string& a, const std::string& b) {
  auto na = parse_int(a);
  auto nb = parse_int(b);
  if (na && nb) return *na < *nb;
  return a < b;
}

namespace detail {

struct PersonView {
  std::string id;
  std::string doc;        // empty when absent
  std::string name;       // cleaned; empty when absent
  std::optional<int> birth_year;
};

class UnionFind {
 public:
  explicit UnionFind(size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  size_t find(size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<size_t> parent_;
};

}  // namespace detail

// N1b identity audit. Detects the three conflict families over the input
// (which, unlike a consolidated census, may carry repeated IDs) and returns
// one cluster per connected component of the conflict graph, plus NONE
// singletons so the clusters cover every ID.
inline std::vector<ConflictCluster> audit_identities(const std::vector<CensalRecord>& records,
                                                     double threshold = 0.80) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw Error(errc::invalid_config, "similarity threshold must be in (0,1)");

  // one view per distinct ID; repeated IDs checked for internal collisions
  std::vector<detail::PersonView> persons;
  std::unordered_map<std::string, size_t> index_of;
  std::set<std::string> collided_ids;
  for (const auto& rec : records) {
    detail::PersonView v;
    v.id = rec.person_id();
    if (rec.row.present(Field::national_doc)) v.doc = trim(rec.row.get(Field::national_doc));
    if (rec.row.present(Field::full_name)) v.name = text::clean_text(rec.row.get(Field::full_name));
    v.birth_year = rec.row.birth_year();

    auto [it, inserted] = index_of.try_emplace(v.id, persons.size());
    if (inserted) {
      persons.push_back(std::move(v));
      continue;
    }
    detail::PersonView& prev = persons[it->second];
    bool doc_conflict = !prev.doc.empty() && !v.doc.empty() && prev.doc != v.doc;
    bool name_conflict = !prev.name.empty() && !v.name.empty() &&
                         levenshtein_similarity(prev.name, v.name) < threshold;
    if (doc_conflict || name_conflict) collided_ids.insert(v.id);
    // keep the more informative payload for downstream matching
    if (prev.doc.empty()) prev.doc = v.doc;
    if (prev.name.empty()) prev.name = v.name;
    if (!prev.birth_year) prev.birth_year = v.birth_year;
  }

  detail::UnionFind uf(persons.size());
  struct Edge {
    size_t a, b;
    bool dni;
    ConflictEvidence ev;
  };
  std::vector<Edge> edges;

  // family 1: shared national document across distinct IDs
  std::map<std::string, std::vector<size_t>> by_doc;
  for (size_t i = 0; i < persons.size(); ++i)
    if (!persons[i].doc.empty()) by_doc[persons[i].doc].push_back(i);
  for (const auto& [doc, idxs] : by_doc) {
    for (size_t i = 0; i < idxs.size(); ++i)
      for (size_t j = i + 1; j < idxs.size(); ++j) {
        const auto& a = persons[idxs[i]];
        const auto& b = persons[idxs[j]];
        double sim = (!a.name.empty() && !b.name.empty())
                         ? levenshtein_similarity(a.name, b.name)
                         : 0.0;
        edges.push_back({idxs[i], idxs[j], true, {a.id, b.id, sim, "dni=" + doc}});
        uf.unite(idxs[i], idxs[j]);
      }
  }

  // family 3: similar name + equal birth year, no shared DNI. Blocking by
  // birth year is exact here because equal birth year is part of the edge
  // definition; a length prefilter discards pairs that cannot clear the
  // threshold.
  std::map<int, std::vector<size_t>> by_year;
  for (size_t i = 0; i < persons.size(); ++i)
    if (persons[i].birth_year && !persons[i].name.empty())
      by_year[*persons[i].birth_year].push_back(i);
  for (const auto& [year, idxs] : by_year) {
    for (size_t i = 0; i < idxs.size(); ++i) {
      const auto& a = persons[idxs[i]];
      size_t alen = text::decode_utf8(a.name).size();
      for (size_t j = i + 1; j < idxs.size(); ++j) {
        const auto& b = persons[idxs[j]];
        if (!a.doc.empty() && !b.doc.empty()) continue;  // DNI family owns doc-bearing pairs
        size_t blen = text::decode_utf8(b.name).size();
        size_t longest = std::max(alen, blen);
        if (longest == 0) continue;
        size_t diff = alen > blen ? alen - blen : blen - alen;
        if (1.0 - double(diff) / double(longest) <= threshold) continue;
        double sim = levenshtein_similarity(a.name, b.name);
        if (sim > threshold) {
          edges.push_back({idxs[i], idxs[j], false,
                           {a.id, b.id, sim, "birth_year=" + std::to_string(year)}});
          uf.unite(idxs[i], idxs[j]);
        }
      }
    }
  }

  // assemble components
  std::map<size_t, ConflictCluster> comps;
  for (size_t i = 0; i < persons.size(); ++i)
    comps[uf.find(i)].member_ids.push_back(persons[i].id);
  std::map<size_t, std::pair<int, int>> edge_counts;  // root -> (dni, name)
  for (auto& e : edges) {
    size_t root = uf.find(e.a);
    comps[root].evidence.push_back(std::move(e.ev));
    e.dni ? ++edge_counts[root].first : ++edge_counts[root].second;
  }

  std::vector<ConflictCluster> out;
  for (auto& [root, cluster] : comps) {
    std::sort(cluster.member_ids.begin(), cluster.member_ids.end(), id_less);
    auto [dni_edges, name_edges] = edge_counts.count(root) ? edge_counts[root] : std::pair(0, 0);
    bool collided = false;
    for (const auto& id : cluster.member_ids)
      if (collided_ids.count(id)) collided = true;
    cluster.names_complete = true;
    for (const auto& id : cluster.member_ids)
      if (persons[index_of[id]].name.empty()) cluster.names_complete = false;
    if (collided) {
      cluster.kind = ConflictKind::ID_COLLISION;
    } else if (dni_edges > 0 && name_edges == 0) {
      cluster.kind = ConflictKind::DNI_DUPLICATE;
      cluster.pure_dni = true;
    } else if (name_edges > 0 && dni_edges == 0) {
      cluster.kind = ConflictKind::NAME_BIRTH_MATCH;
    } else if (dni_edges > 0) {
      cluster.kind = ConflictKind::NAME_BIRTH_MATCH;  // mixed evidence, never merged
    } else {
      cluster.kind = ConflictKind::NONE;
    }
    out.push_back(std::move(cluster));
  }
  std::sort(out.begin(), out.end(), [](const ConflictCluster& a, const ConflictCluster& b) {
    return id_less(a.member_ids.front(), b.member_ids.front());
  });
  return out;
}

// Conservative canonical assignment: only pure shared-DNI clusters whose
// every pairwise name similarity clears the threshold are merged, with the
// earliest ID as canonical. Everything ambiguous keeps its own ID.
inline std::vector<AliasEntry> resolve_canonical(const std::vector<ConflictCluster>& clusters,
                                                 double threshold = 0.80) {
  std::vector<AliasEntry> out;
  char buf[64];
  for (const auto& c : clusters) {
    if (c.kind == ConflictKind::NONE) {
      for (const auto& id : c.member_ids)
        out.push_back({id, id, ResolutionStatus::AUTO_UNIQUE, ""});
      continue;
    }
    double min_sim = 1.0;
    for (const auto& ev : c.evidence) min_sim = std::min(min_sim, ev.similarity);
    bool mergeable = c.kind == ConflictKind::DNI_DUPLICATE && c.pure_dni &&
                     c.names_complete && min_sim > threshold;
    if (mergeable) {
      const std::string& canonical = c.member_ids.front();  // sorted, earliest first
      std::snprintf(buf, sizeof buf, "shared dni, min name sim %.4f", min_sim);
      for (const auto& id : c.member_ids)
        out.push_back({id, canonical, ResolutionStatus::AUTO_MERGED, buf});
    } else {
      std::string why = std::string(to_string(c.kind));
      if (c.kind == ConflictKind::DNI_DUPLICATE)
        why += c.names_complete ? " with weak name evidence" : " with absent names";
      for (const auto& id : c.member_ids)
        out.push_back({id, id, ResolutionStatus::NEEDS_REVIEW, why});
    }
  }
  std::sort(out.begin(), out.end(), [](const AliasEntry& a, const AliasEntry& b) {
    return id_less(a.person_id_original, b.person_id_original);
  });
  return out;
}

// Joins the alias table back onto the census. Row count is preserved by
// construction; an unmapped ID is a hard error, never a silent drop.
inline std::vector<ResolvedRecord> apply_aliases(const std::vector<CensalRecord>& records,
                                                 const std::vector<AliasEntry>& aliases) {
  std::unordered_map<std::string, const AliasEntry*> by_id;
  for (const auto& a : aliases) by_id[a.person_id_original] = &a;
  std::vector<ResolvedRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    auto it = by_id.find(rec.person_id());
    if (it == by_id.end())
      throw Error(errc::unmapped_id, "person_id '" + rec.person_id() + "' has no alias entry");
    out.push_back({rec, it->second->person_id_canonical, it->second->resolution_status});
  }
  return out;
}

}  // namespace cohort
