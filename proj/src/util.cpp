#include "codeslice/util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "codeslice/error.hpp"

namespace codeslice {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::InvalidArgument, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::vector<nlohmann::json> read_jsonl(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path);
    }
    std::vector<nlohmann::json> rows;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception &e) {
            throw Error(ErrorCode::SchemaMismatch, path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return rows;
}

std::string canonical(const nlohmann::json &j) {
    try {
        return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    } catch (const nlohmann::json::type_error &e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("not valid UTF-8: ") + e.what());
    }
}

void write_jsonl(const std::string &path, const std::vector<nlohmann::json> &rows) {
    std::string content;
    for (const auto &row : rows) {
        content += canonical(row);
        content += '\n';
    }
    write_file_atomic(path, content);
}

void append_jsonl(const std::string &path, const nlohmann::json &row) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot append to " + path);
    }
    out << canonical(row) << '\n';
    out.flush();
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path);
    }
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::string &path, std::string_view content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoFailure, "cannot write " + tmp);
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(ErrorCode::IoFailure, "write failed for " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot rename " + tmp + " to " + path + ": " + ec.message());
    }
}

} // namespace codeslice
