#pragma once

#include <cstdint>
#include <iosfwd>

namespace stratify {

struct SyntheticSpec {
    int domains = 7;
    int rows = 2896;
    std::uint64_t seed = 2188;
};

// Municipality-like frame: REGION domain, POP0019..POP65P targets and six
// continuous land-use/population auxiliaries (POPTOT, WOOD, AGRI, PASTURE,
// BUILT, INDUS). Deterministic for a given spec.
void write_synthetic_frame(std::ostream& out, const SyntheticSpec& spec = {});

}  // namespace stratify
