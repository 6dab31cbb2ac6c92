#include "ham/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ham/checksum.hpp"
#include "ham/errors.hpp"

namespace ham::integrity {

namespace {

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::uint64_t parse_hex16(const std::string& s) {
    if (s.size() != 16) throw IntegrityError("malformed checksum field");
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 16);
    if (end != s.c_str() + 16) throw IntegrityError("malformed checksum field");
    return v;
}

} // namespace

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open '" + path + "' for checksumming");
    std::uint64_t h = k_fnv_offset;
    unsigned char buf[65536];
    while (in) {
        in.read(reinterpret_cast<char*>(buf), sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0) {
            h = fnv1a64({buf, static_cast<std::size_t>(got)}, h);
        }
    }
    if (in.bad()) throw IntegrityError("read error while checksumming '" + path + "'");
    return h;
}

void atomic_write(const std::string& path, std::string_view bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IntegrityError("cannot open '" + tmp + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IntegrityError("write failed for '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IntegrityError("cannot rename '" + tmp + "' to '" + path +
                             "': " + ec.message());
    }
}

void RunManifest::add_file(const std::string& dir, const std::string& name) {
    const std::string path = dir + "/" + name;
    ArtifactRecord rec;
    rec.name = name;
    rec.checksum = file_checksum(path);
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw IntegrityError("cannot stat '" + path + "'");
    rec.bytes = static_cast<std::uint64_t>(size);
    artifacts.push_back(std::move(rec));
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["command"] = command;
    j["config"] = config_text;
    j["artifacts"] = nlohmann::json::array();
    for (const ArtifactRecord& a : artifacts) {
        j["artifacts"].push_back({{"name", a.name},
                                  {"bytes", a.bytes},
                                  {"fnv1a64", hex16(a.checksum)}});
    }
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("manifest is not valid json: ") + e.what());
    }
    RunManifest out;
    try {
        out.tool_version = j.at("tool_version").get<std::string>();
        out.command = j.at("command").get<std::string>();
        out.config_text = j.at("config").get<std::string>();
        for (const auto& a : j.at("artifacts")) {
            ArtifactRecord rec;
            rec.name = a.at("name").get<std::string>();
            rec.bytes = a.at("bytes").get<std::uint64_t>();
            rec.checksum = parse_hex16(a.at("fnv1a64").get<std::string>());
            out.artifacts.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("manifest is missing fields: ") + e.what());
    }
    return out;
}

RunManifest RunManifest::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open manifest '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void RunManifest::write(const std::string& dir) const {
    atomic_write(dir + "/manifest.json", to_json());
}

void verify_directory(const std::string& dir) {
    const RunManifest manifest = RunManifest::from_json_file(dir + "/manifest.json");
    for (const ArtifactRecord& a : manifest.artifacts) {
        const std::string path = dir + "/" + a.name;
        std::error_code ec;
        const auto size = std::filesystem::file_size(path, ec);
        if (ec) throw IntegrityError("artifact '" + a.name + "' is missing");
        if (static_cast<std::uint64_t>(size) != a.bytes) {
            throw IntegrityError("artifact '" + a.name + "' changed size");
        }
        if (file_checksum(path) != a.checksum) {
            throw IntegrityError("artifact '" + a.name + "' fails its checksum");
        }
    }
}

} // namespace ham::integrity
