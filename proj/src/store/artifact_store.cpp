#include "designloop/store/artifact_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "designloop/checksum.hpp"
#include "designloop/error.hpp"

namespace designloop::store {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void storage_failure(const std::string& what, const fs::path& path) {
    throw Error(ErrorCode::Storage, what + " '" + path.string() + "': " + std::strerror(errno));
}

class Fd {
public:
    Fd(const fs::path& path, int flags) : fd_(::open(path.c_str(), flags | O_CLOEXEC, 0644)), path_(path) {
        if (fd_ < 0) storage_failure("cannot open", path);
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() {
        if (fd_ >= 0) ::close(fd_);
    }

    void write_all(std::string_view data) {
        while (!data.empty()) {
            const ssize_t n = ::write(fd_, data.data(), data.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                storage_failure("cannot write", path_);
            }
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }
    void sync() {
        if (::fsync(fd_) != 0) storage_failure("cannot sync", path_);
    }

private:
    int fd_;
    fs::path path_;
};

void sync_dir(const fs::path& dir) { Fd(dir, O_RDONLY | O_DIRECTORY).sync(); }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "missing file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Whole-file replacement through a synced temporary.
void replace_file(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
        fd.write_all(content);
        fd.sync();
    }
    if (::rename(tmp.c_str(), path.c_str()) != 0) storage_failure("cannot rename", tmp);
    sync_dir(path.parent_path());
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

VersionMeta meta_from_json(const nlohmann::json& j, ArtifactKind kind) {
    VersionMeta m;
    m.kind = kind;
    m.version = j.at("version").get<std::uint64_t>();
    if (!j.at("parent").is_null()) m.parent = j.at("parent").get<std::uint64_t>();
    m.origin = design::origin_from_name(j.at("origin").get<std::string>());
    m.created_at = j.at("created_at").get<std::int64_t>();
    m.size = j.at("size").get<std::uint64_t>();
    m.checksum = j.at("checksum").get<std::string>();
    return m;
}

} // namespace

std::string_view kind_name(ArtifactKind kind) noexcept { return kind == ArtifactKind::Code ? "code" : "panel"; }

std::optional<ArtifactKind> kind_from_name(std::string_view name) noexcept {
    if (name == "code") return ArtifactKind::Code;
    if (name == "panel") return ArtifactKind::Panel;
    return std::nullopt;
}

nlohmann::ordered_json to_json(const VersionMeta& meta) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(meta.kind);
    j["version"] = meta.version;
    j["parent"] = meta.parent ? nlohmann::ordered_json(*meta.parent) : nlohmann::ordered_json(nullptr);
    j["origin"] = design::origin_name(meta.origin);
    j["created_at"] = meta.created_at;
    j["size"] = meta.size;
    j["checksum"] = meta.checksum;
    return j;
}

std::string content_checksum(std::string_view content) { return "fnv1a64:" + to_hex64(fnv1a64(content)); }

std::string_view crash_point_name(CrashPoint point) noexcept {
    switch (point) {
    case CrashPoint::BeforeTempWrite: return "before-temp-write";
    case CrashPoint::PartialTempWrite: return "partial-temp-write";
    case CrashPoint::BeforeTempSync: return "before-temp-sync";
    case CrashPoint::BeforeRename: return "before-rename";
    case CrashPoint::AfterRename: return "after-rename";
    case CrashPoint::AfterDirSync: return "after-dir-sync";
    case CrashPoint::PartialIndexLine: return "partial-index-line";
    case CrashPoint::IndexLineWithoutNewline: return "index-line-without-newline";
    case CrashPoint::BeforeIndexSync: return "before-index-sync";
    case CrashPoint::AfterIndexSync: return "after-index-sync";
    }
    return "unknown";
}

std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

ArtifactStore::ArtifactStore(fs::path root, Clock clock, StoreMode mode)
    : root_(std::move(root)), clock_(std::move(clock)), read_only_(mode == StoreMode::ReadOnly) {
    std::error_code ec;
    if (read_only_) {
        if (!fs::is_directory(root_)) throw Error(ErrorCode::NotFound, "no store at '" + root_.string() + "'");
        for (const auto& project : list_projects()) {
            RecoveryReport report;
            for (ArtifactKind kind : {ArtifactKind::Code, ArtifactKind::Panel}) recover_kind(project, kind, report);
        }
        return;
    }
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot create store root '" + root_.string() + "': " + ec.message());
    for (const auto& project : list_projects()) {
        RecoveryReport report = recover_project(project);
        if (!report.clean()) recovery_[project] = std::move(report);
    }
}

fs::path ArtifactStore::project_dir(const std::string& project) const { return root_ / project; }

fs::path ArtifactStore::kind_dir(const std::string& project, ArtifactKind kind) const {
    return project_dir(project) / std::string(kind_name(kind));
}

void ArtifactStore::require_project(const std::string& project) const {
    if (!design::valid_project_name(project) || !has_project(project)) {
        throw Error(ErrorCode::NotFound, "project '" + project + "' does not exist");
    }
}

void ArtifactStore::require_writable() const {
    if (read_only_) throw Error(ErrorCode::InvalidState, "store opened read-only");
}

void ArtifactStore::crash(CrashPoint point) const {
    if (crash_hook_) crash_hook_(point);
}

bool ArtifactStore::has_project(const std::string& project) const {
    return design::valid_project_name(project) && fs::exists(project_dir(project) / "project.json");
}

std::vector<std::string> ArtifactStore::list_projects() const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root_)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_directory() && has_project(name)) out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void ArtifactStore::create_project(const std::string& project) {
    require_writable();
    if (!design::valid_project_name(project)) {
        throw Error(ErrorCode::InvalidArgument, "invalid project name '" + project + "'");
    }
    std::lock_guard lock(mutex_);
    if (has_project(project)) throw Error(ErrorCode::Conflict, "project '" + project + "' already exists");
    const fs::path dir = project_dir(project);
    std::error_code ec;
    for (ArtifactKind kind : {ArtifactKind::Code, ArtifactKind::Panel}) {
        fs::create_directories(kind_dir(project, kind), ec);
        if (ec) throw Error(ErrorCode::Storage, "cannot create '" + dir.string() + "': " + ec.message());
        Fd(kind_dir(project, kind) / "index.log", O_WRONLY | O_CREAT | O_TRUNC).sync();
        sync_dir(kind_dir(project, kind));
        index_[{project, kind}].clear();
    }
    nlohmann::ordered_json meta;
    meta["id"] = project;
    meta["created_at"] = clock_();
    meta["format"] = 1;
    replace_file(dir / "project.json", meta.dump() + "\n");
    sync_dir(root_);
}

VersionMeta ArtifactStore::save_artifact(const std::string& project, ArtifactKind kind, std::string_view content,
                                         design::VersionOrigin origin) {
    require_writable();
    require_project(project);
    std::lock_guard lock(mutex_);
    auto& metas = index_[{project, kind}];
    VersionMeta meta;
    meta.kind = kind;
    meta.version = metas.size() + 1;
    if (!metas.empty()) meta.parent = metas.back().version;
    meta.origin = origin;
    meta.created_at = clock_();
    meta.size = content.size();
    meta.checksum = content_checksum(content);

    const fs::path dir = kind_dir(project, kind);
    const fs::path final_path = dir / (std::to_string(meta.version) + ".dat");
    const fs::path tmp = dir / (std::to_string(meta.version) + ".dat.tmp");
    {
        crash(CrashPoint::BeforeTempWrite);
        Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
        fd.write_all(content.substr(0, content.size() / 2));
        crash(CrashPoint::PartialTempWrite);
        fd.write_all(content.substr(content.size() / 2));
        crash(CrashPoint::BeforeTempSync);
        fd.sync();
    }
    crash(CrashPoint::BeforeRename);
    if (::rename(tmp.c_str(), final_path.c_str()) != 0) storage_failure("cannot rename", tmp);
    crash(CrashPoint::AfterRename);
    sync_dir(dir);
    crash(CrashPoint::AfterDirSync);

    const std::string line = to_json(meta).dump() + "\n";
    {
        Fd fd(dir / "index.log", O_WRONLY | O_CREAT | O_APPEND);
        fd.write_all(std::string_view(line).substr(0, line.size() / 2));
        crash(CrashPoint::PartialIndexLine);
        fd.write_all(std::string_view(line).substr(line.size() / 2, line.size() - line.size() / 2 - 1));
        crash(CrashPoint::IndexLineWithoutNewline);
        fd.write_all("\n");
        crash(CrashPoint::BeforeIndexSync);
        fd.sync();
    }
    crash(CrashPoint::AfterIndexSync);
    metas.push_back(meta);
    return meta;
}

std::string ArtifactStore::load_artifact(const std::string& project, ArtifactKind kind, std::uint64_t version) const {
    require_project(project);
    VersionMeta meta;
    {
        std::lock_guard lock(mutex_);
        const auto it = index_.find({project, kind});
        if (it == index_.end() || version == 0 || version > it->second.size()) {
            throw Error(ErrorCode::NotFound, std::string(kind_name(kind)) + " version " + std::to_string(version) +
                                                 " of '" + project + "' does not exist");
        }
        meta = it->second[version - 1];
    }
    const fs::path path = kind_dir(project, kind) / (std::to_string(version) + ".dat");
    std::string content;
    try {
        content = read_file(path);
    } catch (const Error&) {
        throw Error(ErrorCode::Corrupt, "indexed file '" + path.string() + "' is missing");
    }
    if (content.size() != meta.size || content_checksum(content) != meta.checksum) {
        throw Error(ErrorCode::Corrupt, "checksum mismatch in '" + path.string() + "'");
    }
    return content;
}

std::vector<VersionMeta> ArtifactStore::list_versions(const std::string& project, ArtifactKind kind) const {
    require_project(project);
    std::lock_guard lock(mutex_);
    const auto it = index_.find({project, kind});
    return it == index_.end() ? std::vector<VersionMeta>{} : it->second;
}

void ArtifactStore::append_line(const fs::path& file, const std::string& line) {
    require_writable();
    std::lock_guard lock(mutex_);
    Fd fd(file, O_WRONLY | O_CREAT | O_APPEND);
    fd.write_all(line + "\n");
    fd.sync();
}

void ArtifactStore::append_message(const std::string& project, const design::ChatMessage& message) {
    require_project(project);
    append_line(project_dir(project) / "transcript.log", design::to_json(message).dump());
}

std::vector<design::ChatMessage> ArtifactStore::load_transcript(const std::string& project) const {
    require_project(project);
    std::vector<design::ChatMessage> out;
    for (const auto& line : read_lines(project_dir(project) / "transcript.log")) {
        out.push_back(design::message_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

void ArtifactStore::save_trial(const std::string& project, const design::TrialSession& trial) {
    require_writable();
    require_project(project);
    std::lock_guard lock(mutex_);
    replace_file(project_dir(project) / "trial.json", design::to_json(trial).dump() + "\n");
}

std::optional<design::TrialSession> ArtifactStore::load_trial(const std::string& project) const {
    require_project(project);
    const fs::path path = project_dir(project) / "trial.json";
    if (!fs::exists(path)) return std::nullopt;
    try {
        return design::trial_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Corrupt, "malformed '" + path.string() + "': " + e.what());
    }
}

void ArtifactStore::append_llm_record(const std::string& project, const nlohmann::json& record) {
    require_project(project);
    append_line(project_dir(project) / "llm.log", record.dump());
}

std::vector<nlohmann::json> ArtifactStore::load_llm_log(const std::string& project) const {
    require_project(project);
    std::vector<nlohmann::json> out;
    for (const auto& line : read_lines(project_dir(project) / "llm.log")) out.push_back(nlohmann::json::parse(line));
    return out;
}

design::Project ArtifactStore::load_project(const std::string& project) const {
    require_project(project);
    std::vector<design::CodeVersion> code;
    for (const auto& meta : list_versions(project, ArtifactKind::Code)) {
        code.push_back({meta.version, load_artifact(project, ArtifactKind::Code, meta.version), meta.origin});
    }
    std::vector<design::PanelVersion> panels;
    for (const auto& meta : list_versions(project, ArtifactKind::Panel)) {
        design::DesignPanel panel = design::deserialize_panel(load_artifact(project, ArtifactKind::Panel, meta.version));
        panel.version = meta.version;
        panels.push_back({meta.version, std::move(panel), meta.origin});
    }
    return design::Project::restore(project, std::move(code), std::move(panels), load_transcript(project),
                                    load_trial(project));
}

// ------------------------------------------------------------------ recovery

RecoveryReport ArtifactStore::recover_project(const std::string& project) {
    RecoveryReport report;
    for (ArtifactKind kind : {ArtifactKind::Code, ArtifactKind::Panel}) recover_kind(project, kind, report);
    recover_lines(project_dir(project) / "transcript.log", report);
    recover_lines(project_dir(project) / "llm.log", report);
    std::error_code ec;
    fs::remove(project_dir(project) / "trial.json.tmp", ec);
    return report;
}

// Keeps the longest prefix of index lines that parse and are dense. Only the
// last entry can be torn by a crash, so it alone is dropped when its file is
// missing or does not match; a mismatch further back is reported and left for
// load_artifact to refuse. Content files the index does not reference are
// deleted.
void ArtifactStore::recover_kind(const std::string& project, ArtifactKind kind, RecoveryReport& report) {
    const fs::path dir = kind_dir(project, kind);
    std::error_code ec;
    if (!read_only_) fs::create_directories(dir, ec);
    const fs::path index_path = dir / "index.log";
    std::string raw;
    if (fs::exists(index_path)) raw = read_file(index_path);

    auto intact = [&](const VersionMeta& meta) {
        const fs::path path = dir / (std::to_string(meta.version) + ".dat");
        if (!fs::exists(path)) return false;
        const std::string content = read_file(path);
        return content.size() == meta.size && content_checksum(content) == meta.checksum;
    };

    std::vector<VersionMeta> metas;
    std::vector<std::size_t> line_ends;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t nl = raw.find('\n', pos);
        if (nl == std::string::npos) break;
        try {
            VersionMeta meta = meta_from_json(nlohmann::json::parse(raw.substr(pos, nl - pos)), kind);
            if (meta.version != metas.size() + 1) break;
            metas.push_back(std::move(meta));
        } catch (const std::exception&) {
            break;
        }
        pos = nl + 1;
        line_ends.push_back(pos);
    }
    if (!metas.empty() && !intact(metas.back())) {
        metas.pop_back();
        line_ends.pop_back();
    }
    for (const auto& meta : metas) {
        if (!intact(meta)) {
            report.actions.push_back(std::string(kind_name(kind)) + ": version " + std::to_string(meta.version) +
                                     " fails its checksum");
        }
    }
    if (read_only_) {
        std::lock_guard lock(mutex_);
        index_[{project, kind}] = std::move(metas);
        return;
    }
    const std::size_t valid_bytes = line_ends.empty() ? 0 : line_ends.back();
    if (valid_bytes != raw.size()) {
        replace_file(index_path, std::string_view(raw).substr(0, valid_bytes));
        report.actions.push_back(std::string(kind_name(kind)) + ": truncated index after version " +
                                 std::to_string(metas.size()));
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name == "index.log") continue;
        bool referenced = false;
        if (name.size() > 4 && name.compare(name.size() - 4, 4, ".dat") == 0) {
            try {
                const std::uint64_t v = std::stoull(name.substr(0, name.size() - 4));
                referenced = v >= 1 && v <= metas.size() && name == std::to_string(v) + ".dat";
            } catch (const std::exception&) {
            }
        }
        if (!referenced) {
            fs::remove(entry.path(), ec);
            report.actions.push_back(std::string(kind_name(kind)) + ": removed unreferenced " + name);
        }
    }
    index_[{project, kind}] = std::move(metas);
}

void ArtifactStore::recover_lines(const fs::path& file, RecoveryReport& report) {
    if (!fs::exists(file)) return;
    const std::string raw = read_file(file);
    std::size_t valid = 0;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t nl = raw.find('\n', pos);
        if (nl == std::string::npos) break;
        if (!nlohmann::json::accept(raw.substr(pos, nl - pos))) break;
        pos = nl + 1;
        valid = pos;
    }
    if (valid != raw.size()) {
        replace_file(file, std::string_view(raw).substr(0, valid));
        report.actions.push_back(file.filename().string() + ": dropped torn tail");
    }
}

// ------------------------------------------------------------------ observer

void StoreObserver::on_code_version(const std::string& project, const design::CodeVersion& version) {
    const VersionMeta meta = store_.save_artifact(project, ArtifactKind::Code, version.content, version.origin);
    if (meta.version != version.version) {
        throw Error(ErrorCode::Corrupt, "code version mismatch for '" + project + "': store has " +
                                            std::to_string(meta.version) + ", project expects " +
                                            std::to_string(version.version));
    }
}

void StoreObserver::on_panel_version(const std::string& project, const design::PanelVersion& version) {
    const VersionMeta meta =
        store_.save_artifact(project, ArtifactKind::Panel, design::serialize(version.panel), version.origin);
    if (meta.version != version.version) {
        throw Error(ErrorCode::Corrupt, "panel version mismatch for '" + project + "'");
    }
}

void StoreObserver::on_message(const std::string& project, const design::ChatMessage& message) {
    store_.append_message(project, message);
}

void StoreObserver::on_trial(const std::string& project, const design::TrialSession& trial) {
    store_.save_trial(project, trial);
}

} // namespace designloop::store
