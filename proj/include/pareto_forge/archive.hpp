// Pareto archive: (preference, objectives, metrics, checkpoint) records kept
// mutually eps-nondominated under the additive rule. Insertion is the only
// mutating operation and must be externally serialized (single writer).

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pareto_forge/dominance.hpp"
#include "pareto_forge/metrics.hpp"
#include "pareto_forge/scalarize.hpp"

namespace pforge {

struct ArchiveEntry {
    PreferenceVector preference;
    ObjectiveVector objectives;
    MetricsRecord metrics;
    std::string checkpoint;  // path of the checkpoint backing this point, "" if none

    nlohmann::json to_json() const {
        return nlohmann::json{{"k", preference.k},
                              {"objectives", objectives},
                              {"metrics", metrics.to_json()},
                              {"checkpoint", checkpoint}};
    }

    static ArchiveEntry from_json(const nlohmann::json& j) {
        ArchiveEntry e;
        e.preference = PreferenceVector{j.at("k").get<std::vector<double>>()};
        e.objectives = j.at("objectives").get<std::vector<double>>();
        e.metrics = MetricsRecord::from_json(j.at("metrics"));
        e.checkpoint = j.value("checkpoint", "");
        return e;
    }
};

class ParetoArchive {
  public:
    explicit ParetoArchive(double epsilon = 0.0) : epsilon_(epsilon) {
        require(epsilon >= 0.0, "archive epsilon must be >= 0");
    }

    double epsilon() const { return epsilon_; }
    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Returns false if the candidate was rejected by an existing entry.
    bool insert(ArchiveEntry entry) {
        validate_objectives(entry.objectives);
        for (const auto& e : entries_) {
            if (e.objectives == entry.objectives ||
                eps_dominates(e.objectives, entry.objectives, epsilon_))
                return false;
        }
        std::erase_if(entries_, [&](const ArchiveEntry& e) {
            return eps_dominates(entry.objectives, e.objectives, epsilon_);
        });
        entries_.push_back(std::move(entry));
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json recs = nlohmann::json::array();
        for (const auto& e : entries_) recs.push_back(e.to_json());
        return nlohmann::json{{"epsilon", epsilon_}, {"entries", recs}};
    }

    static ParetoArchive from_json(const nlohmann::json& j) {
        ParetoArchive a(j.value("epsilon", 0.0));
        for (const auto& rec : j.at("entries")) a.entries_.push_back(ArchiveEntry::from_json(rec));
        return a;
    }

  private:
    double epsilon_;
    std::vector<ArchiveEntry> entries_;
};

}  // namespace pforge
