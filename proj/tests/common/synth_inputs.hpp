#pragma once

// In-memory datasets from the simulator, processed like files on disk.

#include "core/data_model.hpp"
#include "core/features.hpp"
#include "core/run.hpp"
#include "core/synth.hpp"

namespace toy {

inline emsf::run::Dataset dataset_from(const emsf::synth::SynthDataset& s, emsf::data::RegionId region) {
    emsf::run::Dataset d;
    d.region = region;
    d.events = s.events;
    d.temperature = emsf::data::aggregate_weather(s.weather, s.regions.find(region));
    if (s.covid.days() > 0) d.rt = emsf::features::compute_rt(s.covid);
    if (s.flu.weeks.size() >= 2) d.flu = emsf::data::interpolate_flu(s.flu);
    return d;
}

inline emsf::run::Dataset synth_dataset(std::uint64_t seed, int days, emsf::synth::GroundTruth truth = {}) {
    emsf::synth::SynthConfig c;
    c.seed = seed;
    c.days = days;
    c.truth = truth;
    return dataset_from(emsf::synth::generate(c), c.env.region);
}

}  // namespace toy
