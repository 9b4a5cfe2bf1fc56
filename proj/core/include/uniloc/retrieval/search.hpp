#pragma once

#include "uniloc/numcore/matrix.hpp"
#include "uniloc/scene/sap.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uniloc::retrieval {

using numcore::Matrix;
using scene::Modality;

struct DescriptorDB {
    Modality modality = Modality::image;
    std::vector<std::uint64_t> ids;
    std::vector<std::array<double, 2>> locations;
    Matrix vectors; // one unit-norm row per id
    // Scenes whose descriptor could not be computed.
    std::vector<std::uint64_t> skipped;

    std::size_t size() const noexcept { return ids.size(); }
};

// Checks parallel lengths and id uniqueness.
void validate(const DescriptorDB& db);

struct Hit {
    std::uint64_t id = 0;
    double score = 0.0;
    friend bool operator==(const Hit&, const Hit&) = default;
};

// Exhaustive cosine ranking; ties go to the lower id. Returns min(k, M) hits (M excluding `exclude`).
std::vector<Hit> query_topk(const DescriptorDB& db, std::span<const double> q, std::size_t k,
                            std::optional<std::uint64_t> exclude = std::nullopt);

struct Criterion {
    enum class Kind : std::uint8_t { exactLocation, distanceThreshold };
    Kind kind = Kind::exactLocation;
    double d = 0.0;

    static Criterion exact() { return {Kind::exactLocation, 0.0}; }
    static Criterion within(double meters) { return {Kind::distanceThreshold, meters}; }
    // "exact" or "distance"
    std::string_view key() const noexcept;
    friend bool operator==(const Criterion&, const Criterion&) = default;
};

// "exact" / "exactLocation" or "distance" / "distanceThreshold"; anything else is a config error.
Criterion criterion_from_key(std::string_view key, double d);

struct RecallReport {
    std::string task;
    Criterion criterion;
    std::map<std::size_t, double> recall;
    std::size_t numQueries = 0;
    std::size_t M = 0;
};

RecallReport recall_at_k(const DescriptorDB& queries, const DescriptorDB& db, const std::vector<std::size_t>& ks,
                         const Criterion& criterion, bool excludeSelf, const std::string& task = {});

struct Task {
    Modality query;
    Modality db;

    std::string name() const; // "T2I", "P2P", ...
    bool involves_text() const noexcept { return query == Modality::text || db == Modality::text; }
    bool cross_modal() const noexcept { return query != db; }
    // I2I and P2P remove the query's own scene from the database.
    bool exclude_self() const noexcept { return query == db; }
};

// T2I, I2T, T2P, P2T, I2P, P2I, I2I, P2P
const std::vector<Task>& default_tasks();
Task task_from_name(std::string_view name);

// Text tasks use the exact-location criterion, the rest distance <= d.
Criterion criterion_for(const Task& task, double d);

using DbSet = std::map<Modality, DescriptorDB>;

std::vector<RecallReport> run_task_matrix(const DbSet& dbs, double d, const std::vector<std::size_t>& ks,
                                          const std::vector<Task>& tasks = default_tasks());

// Mean R@1 over the cross-modal reports (text tasks only when textOnly).
double mean_cross_modal_r1(const std::vector<RecallReport>& reports, bool textOnly = false);

// {task, criterion, d, recalls: {"1":..}, numQueries, M}
std::string report_to_json(const RecallReport& r);
// sceneId,modality,x,y,v_0..v_{D-1}
void write_embedding_csv(const DbSet& dbs, std::ostream& out);

} // namespace uniloc::retrieval
