#include "cqasum/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cqasum/error.hpp"

namespace cqasum {

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const Json&, std::size_t)>& on_record) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json record;
        try {
            record = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        if (!record.is_object()) throw ParseError(path.string(), line_no, "expected a JSON object");
        try {
            on_record(record, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string to_jsonl(const std::vector<Json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out.push_back('\n');
    }
    return out;
}

Json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
    write_file_atomic(path, value.dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_fixed2(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    if (std::string_view(buf) == "-0.00") return "0.00";
    return buf;
}

} // namespace cqasum
