#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ham::integrity {

// FNV-1a digest of a file's contents; throws IntegrityError when unreadable.
std::uint64_t file_checksum(const std::string& path);

// Write-then-rename so readers never observe a half-written file.
void atomic_write(const std::string& path, std::string_view bytes);

struct ArtifactRecord {
    std::string name;
    std::uint64_t bytes = 0;
    std::uint64_t checksum = 0;
};

// Record of one tool run: what produced it and the checksums of every
// artifact written before the manifest itself.
struct RunManifest {
    std::string tool_version;
    std::string command;
    std::string config_text;
    std::vector<ArtifactRecord> artifacts;

    // Checksum dir/name and append it to artifacts.
    void add_file(const std::string& dir, const std::string& name);

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
    static RunManifest from_json_file(const std::string& path);

    // Serialize to dir/manifest.json. Call after every artifact is on disk;
    // the manifest is the last file written.
    void write(const std::string& dir) const;
};

// Re-checksum every artifact listed in dir/manifest.json; throws
// IntegrityError naming the first mismatch.
void verify_directory(const std::string& dir);

} // namespace ham::integrity
