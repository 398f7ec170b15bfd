#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "starsim/core/types.hpp"

namespace starsim {

/// A dataset line/block that cannot be mapped into a record. The message
/// carries a "path:line" or "path record N" locator.
class MalformedRecord : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One normalized multiple-choice instance before target assignment.
/// Options are in label order (consecutive letters from 'A').
struct DatasetRecord {
    std::string id;
    std::string stem;
    std::vector<Option> options;
    char answer_label = '?';

    bool operator==(const DatasetRecord&) const = default;
};

enum class DatasetFormat { Normalized, Mmlu, Csqa, Logiqa };

// Accepts "normalized", "mmlu", "csqa", "logiqa"; throws std::invalid_argument.
DatasetFormat dataset_format_from_string(const std::string& name);
std::string to_string(DatasetFormat format);

/// Loads and normalizes a dataset file. Field mappings per format are
/// documented in docs/FORMATS.md. Duplicate ids and records whose answer is
/// not among the options are rejected with MalformedRecord. An empty file is
/// an empty list.
std::vector<DatasetRecord> load_dataset(const std::string& path, DatasetFormat format);

/// How the attacker's target wrong answer is assigned to a sampled question.
enum class TargetRule {
    FixedOffset,   // the option cyclically following the ground truth
    SeededRandom,  // uniform among wrong options, from the sampling seed stream
};

TargetRule target_rule_from_string(const std::string& name);
std::string to_string(TargetRule rule);

/// Draws n questions without replacement via a seed-keyed shuffle and assigns
/// each a target wrong answer. Identical (records, n, seed, rule) inputs give
/// identical output on every platform. Throws std::invalid_argument when
/// n > |records| or n < 0.
std::vector<Question> sample_questions(const std::vector<DatasetRecord>& records, int n,
                                       std::uint64_t seed, TargetRule rule);

}  // namespace starsim
