#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cie/attributes.hpp"
#include "cie/causality.hpp"
#include "cie/environment.hpp"
#include "cie/inference.hpp"

namespace cie {

/// Everything one answer is computed from. Never mutated after publication.
struct Snapshot {
    std::uint64_t revision = 0;
    std::shared_ptr<const Codebook> codebook;
    EntityGraph topology;
    CausalityGraph causality;
    AttributeGraph attributes;
    std::vector<Constraint> constraints;
    /// Latest observed value per attribute id.
    std::map<std::string, double> observed;
    ActiveSymptomSet active;
    Diagnosis diagnosis;  // over the whole environment
    LocalizeOptions options;
};

/// Owns the current snapshot and swaps in a new one on every change, so a
/// reader holding a snapshot sees a single revision throughout.
class Engine {
public:
    Engine(Environment environment, std::shared_ptr<const Codebook> codebook,
           LocalizeOptions options = {});

    std::shared_ptr<const Snapshot> snapshot() const;
    std::uint64_t revision() const { return snapshot()->revision; }

    /// Appends observations and recomputes the active set and diagnosis.
    void ingest(const std::vector<Observation>& observations);
    void clear_observations();
    /// Applies a topology edit and refreshes the causality graph incrementally.
    void mutate_topology(const std::function<void(EntityGraph&)>& edit);

private:
    void publish(std::shared_ptr<Snapshot> next);

    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> current_;
    std::vector<Observation> observations_;  // guarded by mutex_
};

}  // namespace cie
