#include "cie/engine.hpp"

namespace cie {

namespace {

void diagnose(Snapshot& s, const std::vector<Observation>& observations) {
    s.active = activate_symptoms(s.causality, observations);
    s.observed.clear();
    std::map<std::string, Tick> ticks;
    for (const auto& o : observations) {
        const auto* sample = std::get_if<AttributeSample>(&o.kind);
        if (!sample) continue;
        const std::string id = attribute_id(o.entity, sample->attribute);
        auto it = ticks.find(id);
        if (it == ticks.end() || o.tick >= it->second) {
            ticks.insert_or_assign(id, o.tick);
            s.observed.insert_or_assign(id, sample->value);
        }
    }
    s.diagnosis = localize(s.causality, s.active, s.options);
}

}  // namespace

Engine::Engine(Environment environment, std::shared_ptr<const Codebook> codebook,
               LocalizeOptions options) {
    auto s = std::make_shared<Snapshot>(Snapshot{
        1, codebook, std::move(environment.topology), CausalityGraph{},
        std::move(environment.attributes), std::move(environment.constraints), {}, {}, {}, options});
    s->causality = instantiate(s->topology, std::move(codebook));
    diagnose(*s, observations_);
    current_ = std::move(s);
}

std::shared_ptr<const Snapshot> Engine::snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
}

void Engine::publish(std::shared_ptr<Snapshot> next) {
    next->revision = current_->revision + 1;
    current_ = std::move(next);
}

void Engine::ingest(const std::vector<Observation>& observations) {
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<Snapshot>(*current_);
    std::vector<Observation> all = observations_;
    all.insert(all.end(), observations.begin(), observations.end());
    diagnose(*next, all);  // validates before anything is kept
    observations_ = std::move(all);
    publish(std::move(next));
}

void Engine::clear_observations() {
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<Snapshot>(*current_);
    observations_.clear();
    diagnose(*next, observations_);
    publish(std::move(next));
}

void Engine::mutate_topology(const std::function<void(EntityGraph&)>& edit) {
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<Snapshot>(*current_);
    edit(next->topology);
    next->causality = refresh(current_->causality, next->topology, next->codebook);
    std::erase_if(observations_, [&](const Observation& o) { return !next->topology.contains(o.entity); });
    diagnose(*next, observations_);
    publish(std::move(next));
}

}  // namespace cie
