#include "starsim/datasets/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace starsim {

namespace {

using nlohmann::json;

std::string locator(const std::string& path, size_t line) {
    return path + ":" + std::to_string(line);
}

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord(path + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Labels must run A, B, C, ... with the answer among them; shared by every
// adapter so a bad record fails at load, not later at sampling.
void check_record(const DatasetRecord& record, const std::string& where) {
    if (record.options.size() < 2) {
        throw MalformedRecord(where + ": fewer than 2 options");
    }
    for (size_t i = 0; i < record.options.size(); ++i) {
        char expected = static_cast<char>('A' + i);
        if (record.options[i].label != expected) {
            throw MalformedRecord(where + ": option labels must be consecutive letters from A");
        }
    }
    bool answer_found = std::any_of(record.options.begin(), record.options.end(),
                                    [&](const Option& o) { return o.label == record.answer_label; });
    if (!answer_found) {
        throw MalformedRecord(where + ": answer \"" + std::string(1, record.answer_label) +
                              "\" is not an option");
    }
}

char parse_answer_letter(const std::string& value, const std::string& where) {
    std::string t = trim(value);
    if (t.size() != 1 || !std::isalpha(static_cast<unsigned char>(t[0]))) {
        throw MalformedRecord(where + ": answer must be a single letter, got \"" + value + "\"");
    }
    return static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
}

std::vector<DatasetRecord> load_normalized(const std::string& path) {
    std::vector<DatasetRecord> records;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord(path + ": cannot open file");

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = locator(path, line_no);

        json object;
        try {
            object = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecord(where + ": invalid JSON (" + e.what() + ")");
        }
        if (!object.is_object() || !object.contains("id") || !object.contains("stem") ||
            !object.contains("options") || !object.contains("answer")) {
            throw MalformedRecord(where + ": expected keys id, stem, options, answer");
        }

        DatasetRecord record;
        try {
            record.id = object.at("id").get<std::string>();
            record.stem = object.at("stem").get<std::string>();
            const json& options = object.at("options");
            if (!options.is_object()) {
                throw MalformedRecord(where + ": options must be an object");
            }
            // nlohmann objects iterate in sorted key order, i.e. label order.
            for (const auto& [label, text] : options.items()) {
                if (label.size() != 1) {
                    throw MalformedRecord(where + ": option label \"" + label +
                                          "\" is not a single letter");
                }
                record.options.push_back({label[0], text.get<std::string>()});
            }
            record.answer_label =
                parse_answer_letter(object.at("answer").get<std::string>(), where);
        } catch (const json::exception& e) {
            throw MalformedRecord(where + ": bad field type (" + e.what() + ")");
        }
        check_record(record, where);
        records.push_back(std::move(record));
    }
    return records;
}

// Whole-file CSV scan: quoted fields may contain commas, doubled quotes, and
// newlines, so rows cannot be read line by line.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        bool blank = row.size() == 1 && trim(row[0]).empty();
        if (!blank) rows.push_back(row);
        row.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<DatasetRecord> load_mmlu(const std::string& path) {
    std::vector<std::vector<std::string>> rows = parse_csv(read_file(path));
    std::vector<DatasetRecord> records;

    for (size_t r = 0; r < rows.size(); ++r) {
        const std::string where = path + " record " + std::to_string(r + 1);
        const std::vector<std::string>& row = rows[r];
        if (row.size() != 6) {
            throw MalformedRecord(where + ": expected 6 fields (question, 4 choices, answer), got " +
                                  std::to_string(row.size()));
        }
        // Tolerate one header row: first record whose final field is no letter.
        std::string answer = trim(row[5]);
        if (r == 0 && records.empty() &&
            (answer.size() != 1 || !std::isalpha(static_cast<unsigned char>(answer[0])))) {
            continue;
        }

        DatasetRecord record;
        record.id = "mmlu-" + std::to_string(r + 1);
        record.stem = row[0];
        for (int k = 0; k < 4; ++k) {
            record.options.push_back({static_cast<char>('A' + k), row[static_cast<size_t>(k) + 1]});
        }
        record.answer_label = parse_answer_letter(row[5], where);
        check_record(record, where);
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<DatasetRecord> load_csqa(const std::string& path) {
    std::vector<DatasetRecord> records;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord(path + ": cannot open file");

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = locator(path, line_no);

        json object;
        try {
            object = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecord(where + ": invalid JSON (" + e.what() + ")");
        }

        DatasetRecord record;
        try {
            record.id = object.contains("id") ? object.at("id").get<std::string>()
                                              : "csqa-" + std::to_string(line_no);
            const json& question = object.at("question");
            record.stem = question.at("stem").get<std::string>();
            for (const json& choice : question.at("choices")) {
                std::string label = choice.at("label").get<std::string>();
                if (label.size() != 1) {
                    throw MalformedRecord(where + ": choice label \"" + label +
                                          "\" is not a single letter");
                }
                record.options.push_back({label[0], choice.at("text").get<std::string>()});
            }
            record.answer_label =
                parse_answer_letter(object.at("answerKey").get<std::string>(), where);
        } catch (const json::exception& e) {
            throw MalformedRecord(where + ": missing or mistyped field (" + e.what() + ")");
        }
        std::sort(record.options.begin(), record.options.end(),
                  [](const Option& a, const Option& b) { return a.label < b.label; });
        check_record(record, where);
        records.push_back(std::move(record));
    }
    return records;
}

// Blank-line-separated blocks: answer letter, context, question, then one
// "A. text" line per option (continuation lines attach to the last option).
std::vector<DatasetRecord> load_logiqa(const std::string& path) {
    std::string text = read_file(path);
    std::vector<std::vector<std::string>> blocks;
    std::vector<std::string> block;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            if (!block.empty()) blocks.push_back(std::move(block));
            block.clear();
        } else {
            block.push_back(line);
        }
    }
    if (!block.empty()) blocks.push_back(std::move(block));

    std::vector<DatasetRecord> records;
    for (size_t b = 0; b < blocks.size(); ++b) {
        const std::string where = path + " record " + std::to_string(b + 1);
        const std::vector<std::string>& lines = blocks[b];
        if (lines.size() < 5) {
            throw MalformedRecord(where +
                                  ": block needs answer, context, question and >= 2 options");
        }

        DatasetRecord record;
        record.id = "logiqa-" + std::to_string(b + 1);
        record.answer_label = parse_answer_letter(lines[0], where);
        record.stem = trim(lines[1]) + "\n" + trim(lines[2]);

        for (size_t i = 3; i < lines.size(); ++i) {
            std::string entry = trim(lines[i]);
            char expected = static_cast<char>('A' + record.options.size());
            bool starts_option =
                entry.size() >= 2 && std::isalpha(static_cast<unsigned char>(entry[0])) &&
                (entry[1] == '.' || entry[1] == ':') &&
                std::toupper(static_cast<unsigned char>(entry[0])) == expected;
            if (starts_option) {
                record.options.push_back({expected, trim(entry.substr(2))});
            } else if (!record.options.empty()) {
                record.options.back().text += " " + entry;
            } else {
                throw MalformedRecord(where + ": expected an option line starting \"A.\", got \"" +
                                      entry + "\"");
            }
        }
        check_record(record, where);
        records.push_back(std::move(record));
    }
    return records;
}

void reject_duplicate_ids(const std::vector<DatasetRecord>& records, const std::string& path) {
    std::set<std::string> seen;
    for (const DatasetRecord& record : records) {
        if (!seen.insert(record.id).second) {
            throw MalformedRecord(path + ": duplicate record id \"" + record.id + "\"");
        }
    }
}

// Unbiased bounded draw by rejection; std::uniform_int_distribution is
// implementation-defined and would break cross-platform determinism.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % bound);
    std::uint64_t value = rng();
    while (value >= limit) value = rng();
    return value % bound;
}

}  // namespace

DatasetFormat dataset_format_from_string(const std::string& name) {
    if (name == "normalized") return DatasetFormat::Normalized;
    if (name == "mmlu") return DatasetFormat::Mmlu;
    if (name == "csqa") return DatasetFormat::Csqa;
    if (name == "logiqa") return DatasetFormat::Logiqa;
    throw std::invalid_argument("unknown dataset format \"" + name + "\"");
}

std::string to_string(DatasetFormat format) {
    switch (format) {
        case DatasetFormat::Normalized: return "normalized";
        case DatasetFormat::Mmlu: return "mmlu";
        case DatasetFormat::Csqa: return "csqa";
        case DatasetFormat::Logiqa: return "logiqa";
    }
    return "normalized";
}

std::vector<DatasetRecord> load_dataset(const std::string& path, DatasetFormat format) {
    std::vector<DatasetRecord> records;
    switch (format) {
        case DatasetFormat::Normalized: records = load_normalized(path); break;
        case DatasetFormat::Mmlu: records = load_mmlu(path); break;
        case DatasetFormat::Csqa: records = load_csqa(path); break;
        case DatasetFormat::Logiqa: records = load_logiqa(path); break;
    }
    reject_duplicate_ids(records, path);
    return records;
}

TargetRule target_rule_from_string(const std::string& name) {
    if (name == "fixed_offset") return TargetRule::FixedOffset;
    if (name == "seeded_random") return TargetRule::SeededRandom;
    throw std::invalid_argument("unknown target rule \"" + name + "\"");
}

std::string to_string(TargetRule rule) {
    return rule == TargetRule::FixedOffset ? "fixed_offset" : "seeded_random";
}

std::vector<Question> sample_questions(const std::vector<DatasetRecord>& records, int n,
                                       std::uint64_t seed, TargetRule rule) {
    if (n < 0 || static_cast<size_t>(n) > records.size()) {
        throw std::invalid_argument("cannot sample " + std::to_string(n) + " of " +
                                    std::to_string(records.size()) + " records");
    }

    std::mt19937_64 rng(seed);
    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Fisher-Yates by hand: std::shuffle's draw sequence is not pinned down
    // by the standard, and sampling must replay bit-for-bit from the seed.
    for (size_t i = order.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(bounded_draw(rng, i));
        std::swap(order[i - 1], order[j]);
    }

    std::vector<Question> questions;
    questions.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const DatasetRecord& record = records[order[static_cast<size_t>(k)]];
        Question question;
        question.id = record.id;
        question.stem = record.stem;
        question.options = record.options;
        question.ground_truth = record.answer_label;

        size_t truth_index =
            static_cast<size_t>(record.answer_label - record.options.front().label);
        if (rule == TargetRule::FixedOffset) {
            size_t target_index = (truth_index + 1) % record.options.size();
            question.target_wrong = record.options[target_index].label;
        } else {
            size_t wrong = static_cast<size_t>(
                bounded_draw(rng, static_cast<std::uint64_t>(record.options.size() - 1)));
            if (wrong >= truth_index) ++wrong;
            question.target_wrong = record.options[wrong].label;
        }
        question.validate();
        questions.push_back(std::move(question));
    }
    return questions;
}

}  // namespace starsim
