#pragma once

#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace tale {

/// Thrown when a line-delimited JSON file violates its schema. Carries the
/// 1-based line number of the offending record.
class JsonlError : public std::runtime_error {
public:
    JsonlError(std::string path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)),
          line_(line) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// Calls `fn(record, line_number)` for every non-blank line of a JSONL file.
inline void for_each_jsonl_record(const std::string& path,
                                  const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            throw JsonlError(path, line_no, "invalid JSON");
        }
        fn(record, line_no);
    }
}

}  // namespace tale
