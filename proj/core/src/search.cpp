#include "uniloc/retrieval/search.hpp"

#include "uniloc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

namespace uniloc::retrieval {

void validate(const DescriptorDB& db) {
    if (db.locations.size() != db.ids.size() || db.vectors.rows() != db.ids.size())
        raise(ErrorKind::data, "descriptor db has mismatched lengths");
    std::set<std::uint64_t> seen(db.ids.begin(), db.ids.end());
    if (seen.size() != db.ids.size()) raise(ErrorKind::data, "descriptor db has duplicate ids");
}

std::vector<Hit> query_topk(const DescriptorDB& db, std::span<const double> q, std::size_t k,
                            std::optional<std::uint64_t> exclude) {
    if (db.size() == 0) raise(ErrorKind::data, "descriptor db is empty");
    if (k == 0) raise(ErrorKind::contract, "k must be at least 1");
    if (q.size() != db.vectors.cols())
        raise(ErrorKind::dimension, "query width " + std::to_string(q.size()) + " != db width " +
                                        std::to_string(db.vectors.cols()));
    std::vector<Hit> hits;
    hits.reserve(db.size());
    for (std::size_t r = 0; r < db.size(); ++r) {
        if (exclude && db.ids[r] == *exclude) continue;
        const auto row = db.vectors.row_span(r);
        double s = 0.0;
        for (std::size_t c = 0; c < q.size(); ++c) s += row[c] * q[c];
        hits.push_back({db.ids[r], s});
    }
    const auto better = [](const Hit& a, const Hit& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; };
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
    hits.resize(n);
    return hits;
}

std::string_view Criterion::key() const noexcept { return kind == Kind::exactLocation ? "exact" : "distance"; }

Criterion criterion_from_key(std::string_view key, double d) {
    if (key == "exact" || key == "exactLocation") return Criterion::exact();
    if (key == "distance" || key == "distanceThreshold") {
        if (!(d >= 0.0)) raise(ErrorKind::config, "distance threshold must be non-negative");
        return Criterion::within(d);
    }
    raise(ErrorKind::config, "unknown criterion '" + std::string(key) + "'");
}

RecallReport recall_at_k(const DescriptorDB& queries, const DescriptorDB& db, const std::vector<std::size_t>& ks,
                         const Criterion& criterion, bool excludeSelf, const std::string& task) {
    if (ks.empty()) raise(ErrorKind::config, "no k values requested");
    for (std::size_t k : ks)
        if (k == 0) raise(ErrorKind::config, "k must be at least 1");
    if (criterion.kind == Criterion::Kind::distanceThreshold && !(criterion.d >= 0.0))
        raise(ErrorKind::config, "distance threshold must be non-negative");
    validate(db);
    validate(queries);

    std::map<std::uint64_t, std::array<double, 2>> where;
    for (std::size_t r = 0; r < db.size(); ++r) where[db.ids[r]] = db.locations[r];

    RecallReport rep;
    rep.task = task;
    rep.criterion = criterion;
    rep.numQueries = queries.size();
    rep.M = db.size();
    const std::size_t kMax = *std::max_element(ks.begin(), ks.end());
    std::map<std::size_t, std::size_t> correct;
    for (std::size_t k : ks) correct[k] = 0;

    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const std::uint64_t qid = queries.ids[qi];
        const auto hits = query_topk(db, queries.vectors.row_span(qi), kMax,
                                     excludeSelf ? std::optional<std::uint64_t>(qid) : std::nullopt);
        // Rank of the first correct hit, if any.
        constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
        std::size_t first = none;
        for (std::size_t h = 0; h < hits.size() && first == none; ++h) {
            bool ok;
            if (criterion.kind == Criterion::Kind::exactLocation) {
                ok = hits[h].id == qid;
            } else {
                const auto& loc = where.at(hits[h].id);
                ok = std::hypot(loc[0] - queries.locations[qi][0], loc[1] - queries.locations[qi][1]) <= criterion.d;
            }
            if (ok) first = h;
        }
        for (std::size_t k : ks)
            if (first < k) ++correct[k];
    }
    for (std::size_t k : ks)
        rep.recall[k] = rep.numQueries ? static_cast<double>(correct[k]) / static_cast<double>(rep.numQueries) : 0.0;
    return rep;
}

std::string Task::name() const {
    auto letter = [](Modality m) { return m == Modality::text ? 'T' : (m == Modality::image ? 'I' : 'P'); };
    return {letter(query), '2', letter(db)};
}

const std::vector<Task>& default_tasks() {
    static const std::vector<Task> tasks{
        {Modality::text, Modality::image},  {Modality::image, Modality::text},  {Modality::text, Modality::point},
        {Modality::point, Modality::text},  {Modality::image, Modality::point}, {Modality::point, Modality::image},
        {Modality::image, Modality::image}, {Modality::point, Modality::point}};
    return tasks;
}

Task task_from_name(std::string_view name) {
    auto mod = [&](char c) {
        switch (c) {
        case 'T': return Modality::text;
        case 'I': return Modality::image;
        case 'P': return Modality::point;
        default: raise(ErrorKind::config, "unknown task '" + std::string(name) + "'");
        }
    };
    if (name.size() != 3 || name[1] != '2') raise(ErrorKind::config, "unknown task '" + std::string(name) + "'");
    return {mod(name[0]), mod(name[2])};
}

Criterion criterion_for(const Task& task, double d) {
    return task.involves_text() ? Criterion::exact() : Criterion::within(d);
}

std::vector<RecallReport> run_task_matrix(const DbSet& dbs, double d, const std::vector<std::size_t>& ks,
                                          const std::vector<Task>& tasks) {
    std::vector<RecallReport> out;
    for (const Task& t : tasks) {
        const auto q = dbs.find(t.query);
        const auto db = dbs.find(t.db);
        if (q == dbs.end() || db == dbs.end())
            raise(ErrorKind::evaluation, "missing descriptors for task " + t.name());
        out.push_back(recall_at_k(q->second, db->second, ks, criterion_for(t, d), t.exclude_self(), t.name()));
    }
    return out;
}

double mean_cross_modal_r1(const std::vector<RecallReport>& reports, bool textOnly) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : reports) {
        const Task t = task_from_name(r.task);
        if (!t.cross_modal() || (textOnly && !t.involves_text())) continue;
        const auto it = r.recall.find(1);
        if (it == r.recall.end()) continue;
        sum += it->second;
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

std::string report_to_json(const RecallReport& r) {
    nlohmann::ordered_json j;
    j["task"] = r.task;
    j["criterion"] = r.criterion.key();
    j["d"] = r.criterion.kind == Criterion::Kind::distanceThreshold ? nlohmann::ordered_json(r.criterion.d)
                                                                     : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json rec = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.recall) rec[std::to_string(k)] = v;
    j["recalls"] = rec;
    j["numQueries"] = r.numQueries;
    j["M"] = r.M;
    return j.dump();
}

void write_embedding_csv(const DbSet& dbs, std::ostream& out) {
    std::size_t dim = 0;
    for (const auto& [m, db] : dbs) dim = std::max(dim, db.vectors.cols());
    out << "sceneId,modality,x,y";
    for (std::size_t i = 0; i < dim; ++i) out << ",v_" << i;
    out << '\n';
    char buf[32];
    for (const auto& [m, db] : dbs)
        for (std::size_t r = 0; r < db.size(); ++r) {
            out << db.ids[r] << ',' << scene::modality_key(m);
            for (double v : db.locations[r]) {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << ',' << buf;
            }
            for (double v : db.vectors.row_span(r)) {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << ',' << buf;
            }
            out << '\n';
        }
    if (!out) raise(ErrorKind::io, "failed writing embedding csv");
}

} // namespace uniloc::retrieval
