#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "starsim/backend/backend.hpp"
#include "starsim/core/types.hpp"
#include "starsim/star/defense.hpp"

namespace starsim {

/// A persisted transcript line that cannot be parsed back.
class TranscriptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One round of one agent's history: what it said and what the orchestrator
/// delivered to it beforehand (rectified text included, when the defense
/// swapped any in).
struct MemoryEntry {
    Message own;
    std::vector<Message> observed;

    bool operator==(const MemoryEntry&) const = default;
};

/// Complete record of one question's run: every message, every delivery,
/// every defense report, every vote. Metrics are recomputable from
/// transcripts alone.
struct Transcript {
    static constexpr int kSchemaVersion = 1;

    std::string config_hash;
    Question question;
    std::vector<AgentRole> roles;              // one per agent, index order
    std::vector<std::vector<Message>> rounds;  // rounds[t-1], agent index order
    std::vector<std::vector<MemoryEntry>> memories;  // memories[agent][t-1]
    std::vector<DefenseReport> defense_reports;      // empty when defense off
    // Observational probe: the vote as of each round's end, using the
    // exclusions accumulated so far. The last entry is the final vote.
    std::vector<VoteResult> per_round_votes;
    VoteResult final_vote;
    std::vector<UsageRecord> usage;
    bool failed = false;
    std::string error;  // diagnostic, set only when failed
};

// One-line JSON form (schema_version field included), newline-free.
std::string transcript_to_json_line(const Transcript& transcript);
// Throws TranscriptError on malformed input or unknown schema version.
Transcript transcript_from_json_line(const std::string& line);

// Reads every line of a transcripts JSONL file.
std::vector<Transcript> load_transcripts(const std::string& path);

}  // namespace starsim
