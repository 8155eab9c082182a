// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace osiris {

// Event record shared by every unit model: (cycle, stage, lane, op).
struct TraceEvent {
    std::uint64_t cycle = 0;
    std::uint32_t stage = 0;
    std::uint32_t lane = 0;
    const char* op = "";
};

struct EventTrace {
    bool enabled = false;
    std::vector<TraceEvent> events;

    void emit(std::uint64_t cycle, std::uint32_t stage, std::uint32_t lane, const char* op) {
        if (enabled) events.push_back({cycle, stage, lane, op});
    }

    void write_csv(std::ostream& os) const {
        os << "cycle,stage,lane,op\n";
        for (const auto& e : events)
            os << e.cycle << ',' << e.stage << ',' << e.lane << ',' << e.op << '\n';
    }
};

}  // namespace osiris
