#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "designloop/design/project.hpp"

namespace designloop::store {

enum class ArtifactKind { Code, Panel };

std::string_view kind_name(ArtifactKind kind) noexcept;
std::optional<ArtifactKind> kind_from_name(std::string_view name) noexcept;

struct VersionMeta {
    ArtifactKind kind = ArtifactKind::Code;
    std::uint64_t version = 0;
    std::int64_t created_at = 0; // milliseconds since the Unix epoch
    std::optional<std::uint64_t> parent;
    design::VersionOrigin origin = design::VersionOrigin::Manual;
    std::uint64_t size = 0;
    std::string checksum; // "fnv1a64:<16 hex digits>"

    bool operator==(const VersionMeta&) const = default;
};

nlohmann::ordered_json to_json(const VersionMeta& meta);

std::string content_checksum(std::string_view content);

// Steps of save_artifact at which a simulated crash can be injected. The two
// Partial points leave a half-written file or index line behind.
enum class CrashPoint {
    BeforeTempWrite,
    PartialTempWrite,
    BeforeTempSync,
    BeforeRename,
    AfterRename,
    AfterDirSync,
    PartialIndexLine,
    IndexLineWithoutNewline,
    BeforeIndexSync,
    AfterIndexSync,
};

inline constexpr CrashPoint kCrashPoints[] = {
    CrashPoint::BeforeTempWrite, CrashPoint::PartialTempWrite,        CrashPoint::BeforeTempSync,
    CrashPoint::BeforeRename,    CrashPoint::AfterRename,             CrashPoint::AfterDirSync,
    CrashPoint::PartialIndexLine, CrashPoint::IndexLineWithoutNewline, CrashPoint::BeforeIndexSync,
    CrashPoint::AfterIndexSync};

std::string_view crash_point_name(CrashPoint point) noexcept;

// Thrown by test crash hooks; the store object must be discarded afterwards.
struct SimulatedCrash : std::runtime_error {
    explicit SimulatedCrash(CrashPoint p) : std::runtime_error(std::string(crash_point_name(p))), point(p) {}
    CrashPoint point;
};

struct RecoveryReport {
    std::vector<std::string> actions; // human-readable, one per repair
    bool clean() const noexcept { return actions.empty(); }
};

using Clock = std::function<std::int64_t()>;
enum class StoreMode { ReadWrite, ReadOnly };
std::int64_t system_clock_ms();

// Flat-file project store:
//   <root>/<project>/project.json
//   <root>/<project>/<code|panel>/<version>.dat
//   <root>/<project>/<code|panel>/index.log      one JSON line per version
//   <root>/<project>/transcript.log, llm.log      JSON lines
//   <root>/<project>/trial.json
// Content files are written to a temporary name, synced and renamed before
// their index line is appended, so the index only names complete files.
// Opening the store repairs whatever a crash left behind.
class ArtifactStore {
public:
    // ReadOnly skips recovery (nothing on disk is touched) and rejects
    // mutations with InvalidState; for inspecting a store a server may be
    // writing to.
    explicit ArtifactStore(std::filesystem::path root, Clock clock = system_clock_ms,
                           StoreMode mode = StoreMode::ReadWrite);

    const std::filesystem::path& root() const noexcept { return root_; }
    void set_crash_hook(std::function<void(CrashPoint)> hook) { crash_hook_ = std::move(hook); }

    // Conflict if the project exists.
    void create_project(const std::string& project);
    bool has_project(const std::string& project) const;
    std::vector<std::string> list_projects() const;

    VersionMeta save_artifact(const std::string& project, ArtifactKind kind, std::string_view content,
                              design::VersionOrigin origin);
    // NotFound for unknown versions, Corrupt when the bytes fail their checksum.
    std::string load_artifact(const std::string& project, ArtifactKind kind, std::uint64_t version) const;
    std::vector<VersionMeta> list_versions(const std::string& project, ArtifactKind kind) const;

    void append_message(const std::string& project, const design::ChatMessage& message);
    std::vector<design::ChatMessage> load_transcript(const std::string& project) const;
    void save_trial(const std::string& project, const design::TrialSession& trial);
    std::optional<design::TrialSession> load_trial(const std::string& project) const;
    void append_llm_record(const std::string& project, const nlohmann::json& record);
    std::vector<nlohmann::json> load_llm_log(const std::string& project) const;

    // Rebuilds the in-memory project from its files.
    design::Project load_project(const std::string& project) const;

    const std::map<std::string, RecoveryReport>& recovery() const noexcept { return recovery_; }

private:
    std::filesystem::path project_dir(const std::string& project) const;
    std::filesystem::path kind_dir(const std::string& project, ArtifactKind kind) const;
    void require_project(const std::string& project) const;
    void crash(CrashPoint point) const;
    void require_writable() const;
    RecoveryReport recover_project(const std::string& project);
    void recover_kind(const std::string& project, ArtifactKind kind, RecoveryReport& report);
    static void recover_lines(const std::filesystem::path& file, RecoveryReport& report);
    void append_line(const std::filesystem::path& file, const std::string& line);

    std::filesystem::path root_;
    Clock clock_;
    std::function<void(CrashPoint)> crash_hook_;
    bool read_only_ = false;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, ArtifactKind>, std::vector<VersionMeta>> index_;
    std::map<std::string, RecoveryReport> recovery_;
};

// Persists every project mutation before it becomes visible.
class StoreObserver : public design::ProjectObserver {
public:
    explicit StoreObserver(ArtifactStore& store) : store_(store) {}

    void on_code_version(const std::string& project, const design::CodeVersion& version) override;
    void on_panel_version(const std::string& project, const design::PanelVersion& version) override;
    void on_message(const std::string& project, const design::ChatMessage& message) override;
    void on_trial(const std::string& project, const design::TrialSession& trial) override;

private:
    ArtifactStore& store_;
};

} // namespace designloop::store
