// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Usage: uniloc_acceptance [criterion numbers...]   (default: all)

#include "../support/cases.hpp"
#include "uniloc/errors.hpp"
#include "uniloc/loss/contrastive.hpp"
#include "uniloc/retrieval/database.hpp"
#include "uniloc/scene/sap.hpp"
#include "uniloc/scenegen/camera.hpp"
#include "uniloc/scenegen/dataset_io.hpp"
#include "uniloc/scenegen/hints.hpp"
#include "uniloc/scenegen/world.hpp"
#include "uniloc/train/gradcheck_suite.hpp"
#include "uniloc/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

using namespace uniloc;
using numcore::Matrix;
using numcore::ParamStore;
using numcore::Rng;
using retrieval::Criterion;
using retrieval::RecallReport;
using scene::Modality;

namespace {

int failures = 0;

void verdict(const std::string& id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  %-3s %-34s %s\n", pass ? "PASS" : "FAIL", id.c_str(), name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// --- 1 ----------------------------------------------------------------------------------

void gradient_integrity() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto blocks = train::run_gradcheck_suite(20240601);
    const double secs = seconds_since(t0);
    double worst = 0.0;
    std::string where;
    for (const auto& b : blocks) {
        if (b.worst >= worst) {
            worst = b.worst;
            where = b.block + ":" + b.worstPath;
        }
        std::printf("      %-16s worst %.2e over %zu parameters\n", b.block.c_str(), b.worst, b.parameters);
    }
    verdict("1", "gradient integrity", worst < 1e-4 && secs < 60.0,
            std::to_string(blocks.size()) + " blocks, worst " + fmt("%.2e", worst) + " (" + where + ") < 1e-4, " +
                fmt("%.1f", secs) + " s < 60 s");
}

// --- 2 ----------------------------------------------------------------------------------

void sap_contracts() {
    constexpr std::size_t kDim = 8;
    constexpr int kTrials = 1000;
    const scene::SapConfig cfg;
    Rng rng(77);
    double sumErr = 0.0, permErr = 0.0, singleErr = 0.0, maskedWeight = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
        const Modality m = scene::kAllModalities[static_cast<std::size_t>(trial % 3)];
        ParamStore s;
        scene::init_sap(s, m, kDim, cfg, numcore::mix_seed(91, static_cast<std::uint64_t>(trial)));
        const std::size_t v = 1 + static_cast<std::size_t>(rng.uniform_int(0, 11));
        const double scale = rng.uniform(0.1, 3.0);
        Matrix rows(v, kDim);
        for (double& x : rows.data()) x = scale * rng.normal();

        const auto set = scene::make_instance_set(rows, m);
        const Matrix T = scene::sap_attention(set, s, cfg);
        const auto w = scene::sap_weights(T, set.mask, s, m);
        double total = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (set.mask[i]) total += w[i];
            else maskedWeight = std::max(maskedWeight, std::abs(w[i]));
        }
        sumErr = std::max(sumErr, std::abs(total - 1.0));

        std::vector<std::size_t> perm(v);
        for (std::size_t i = 0; i < v; ++i) perm[i] = i;
        rng.shuffle(perm);
        Matrix shuffled(v, kDim);
        for (std::size_t r = 0; r < v; ++r)
            for (std::size_t c = 0; c < kDim; ++c) shuffled(r, c) = rows(perm[r], c);
        permErr = std::max(permErr, max_abs_diff(scene::scene_descriptor(set, s, cfg),
                                                 scene::scene_descriptor(scene::make_instance_set(shuffled, m), s, cfg)));

        // Lone instance: the descriptor is the normalized attention output, computed independently.
        Matrix one(1, kDim);
        for (std::size_t c = 0; c < kDim; ++c) one(0, c) = rows(0, c);
        oracle::Vec t(one.row_span(0).begin(), one.row_span(0).end());
        for (std::size_t l = 0; l < cfg.depth_for(m); ++l)
            t = testing::single_token_block(s, "sap/" + std::string(scene::modality_key(m)) + "/attn" + std::to_string(l), t);
        singleErr = std::max(singleErr, max_abs_diff(scene::scene_descriptor(scene::make_instance_set(one, m), s, cfg),
                                                     oracle::normalized(t)));
    }
    verdict("2", "attention pooling contracts",
            sumErr <= 1e-9 && maskedWeight == 0.0 && permErr <= 1e-9 && singleErr <= 1e-9,
            std::to_string(kTrials) + " inputs: |sum w - 1| " + fmt("%.1e", sumErr) + ", permutation " +
                fmt("%.1e", permErr) + ", V=1 " + fmt("%.1e", singleErr) + " (all <= 1e-9)");
}

// --- 3 ----------------------------------------------------------------------------------

double oracle_batch_loss(const Matrix& a, const Matrix& b, double tau) {
    const auto am = testing::to_mat(a), bm = testing::to_mat(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < am.size(); ++i) sum += oracle::info_nce_row(am, bm, i, tau);
    return sum / static_cast<double>(am.size());
}

void loss_oracles() {
    bool singleZero = true;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Matrix a = testing::random_unit_rows(1, 8, seed), b = testing::random_unit_rows(1, 8, seed + 100);
        singleZero = singleZero && loss::batch_contrastive({a, b, 0.1}) == 0.0;
    }

    // Rotated identity: both rows orthonormal, matched pairs have cosine 1, others 0.
    double orthoErr = 0.0;
    const double expect = 2.0 * std::log(1.0 + std::exp(-1.0));
    for (double angle : {0.0, 0.3, 1.1, 2.5}) {
        const Matrix r{{std::cos(angle), std::sin(angle)}, {-std::sin(angle), std::cos(angle)}};
        orthoErr = std::max(orthoErr, std::abs(loss::batch_contrastive({r, r, 1.0}) - expect));
    }

    double swapErr = 0.0, oracleErr = 0.0;
    Rng rng(5);
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 14));
        const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform_int(0, 14));
        const double tau = rng.uniform(0.05, 1.0);
        const Matrix a = testing::random_unit_rows(n, d, 3 * seed), b = testing::random_unit_rows(n, d, 3 * seed + 1);
        const double ab = loss::batch_contrastive({a, b, tau});
        swapErr = std::max(swapErr, std::abs(ab - loss::batch_contrastive({b, a, tau})));
        oracleErr = std::max(oracleErr, std::abs(ab - oracle_batch_loss(a, b, tau)) / std::max(1.0, std::abs(ab)));
    }
    verdict("3", "contrastive loss oracles", singleZero && orthoErr <= 1e-10 && swapErr <= 1e-12,
            std::string("N=1 ") + (singleZero ? "exactly 0" : "NOT 0") + ", 2x2 orthonormal err " +
                fmt("%.1e", orthoErr) + " <= 1e-10, swap " + fmt("%.1e", swapErr) + " <= 1e-12 (row oracle " +
                fmt("%.1e", oracleErr) + ")");
}

// --- 4 ----------------------------------------------------------------------------------

void retrieval_exactness() {
    std::size_t mismatches = 0, monotone = 0, comparisons = 0;
    std::size_t maxM = 0;
    const std::vector<std::size_t> ks{1, 3, 5, 10};
    const std::vector<double> ds{1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto c = testing::random_case(1000 + seed);
        maxM = std::max(maxM, c.db.size());
        const auto dbm = testing::to_mat(c.db.vectors), qm = testing::to_mat(c.queries.vectors);
        const std::vector<std::size_t> ids(c.db.ids.begin(), c.db.ids.end());

        // Top-k lists against a full sort.
        for (std::size_t q = 0; q < qm.size(); ++q) {
            const auto want = oracle::rank_all(dbm, ids, qm[q]);
            const auto got = retrieval::query_topk(c.db, c.queries.vectors.row_span(q), 5);
            for (std::size_t i = 0; i < got.size(); ++i) mismatches += got[i].id != want[i];
            mismatches += got.size() != std::min<std::size_t>(5, want.size());
            ++comparisons;
        }

        for (bool excludeSelf : {false, true}) {
            std::vector<double> prevByK(ks.size(), -1.0);
            for (double d : ds) {
                const auto rep = retrieval::recall_at_k(c.queries, c.db, ks, Criterion::within(d), excludeSelf);
                double prev = -1.0;
                for (std::size_t i = 0; i < ks.size(); ++i) {
                    const double want = oracle::recall(dbm, ids, c.db.locations, qm, ids, c.queries.locations, ks[i],
                                                       false, d, excludeSelf);
                    mismatches += rep.recall.at(ks[i]) != want;
                    monotone += rep.recall.at(ks[i]) < prev;
                    monotone += rep.recall.at(ks[i]) < prevByK[i];
                    prev = rep.recall.at(ks[i]);
                    prevByK[i] = prev;
                    ++comparisons;
                }
            }
            const auto ex = retrieval::recall_at_k(c.queries, c.db, ks, Criterion::exact(), excludeSelf);
            double prev = -1.0;
            for (std::size_t k : ks) {
                const double want = oracle::recall(dbm, ids, c.db.locations, qm, ids, c.queries.locations, k, true, 0.0,
                                                   excludeSelf);
                mismatches += ex.recall.at(k) != want;
                monotone += ex.recall.at(k) < prev;
                prev = ex.recall.at(k);
                ++comparisons;
            }
        }
    }
    verdict("4", "retrieval exactness", mismatches == 0 && monotone == 0 && maxM <= 64,
            "100 random DBs (M <= " + std::to_string(maxM) + "), " + std::to_string(comparisons) + " comparisons, " +
                std::to_string(mismatches) + " oracle mismatches, " + std::to_string(monotone) +
                " monotonicity violations");
}

// --- 5 ----------------------------------------------------------------------------------

std::string serialized(const scenegen::WorldConfig& wc) {
    std::ostringstream out;
    scenegen::write_dataset(scenegen::generate_world(wc), out);
    return out.str();
}

void pipeline_semantics() {
    bool identical = true, distinct = true;
    for (std::uint64_t seed : {42ULL, 7ULL, 1234ULL}) {
        scenegen::WorldConfig wc;
        wc.seed = seed;
        if (seed != 42) wc.numScenes = 96;
        const auto a = serialized(wc);
        identical = identical && a == serialized(wc);
        wc.seed = seed + 1;
        distinct = distinct && a != serialized(wc);
    }

    std::size_t regionMismatch = 0;
    for (int i = 0; i <= 100; ++i)
        for (int j = 0; j <= 100; ++j) {
            const double u = i / 100.0, v = j / 100.0;
            regionMismatch += scenegen::region_label(u, v) != oracle::region(u, v);
        }

    // Hand-derived pinhole cases.
    double projErr = 0.0;
    bool behindRejected = true;
    auto expect = [&](const scenegen::CameraModel& cam, scenegen::Vec3 p, double u, double v) {
        const auto px = scenegen::project_point(p, cam);
        if (!px) {
            projErr = 1e9;
            return;
        }
        projErr = std::max({projErr, std::abs(px->u - u), std::abs(px->v - v)});
    };
    scenegen::CameraModel id;
    id.pose = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    id.fx = id.fy = 500.0;
    id.cx = 320.0;
    id.cy = 240.0;
    expect(id, {1, 2, 4}, 445.0, 490.0);
    expect(id, {0, 0, 5}, 320.0, 240.0);
    expect(id, {-2, 1, 8}, 195.0, 302.5);
    behindRejected = behindRejected && !scenegen::project_point({0, 0, -1}, id);
    behindRejected = behindRejected && !scenegen::project_point({3, 1, 0}, id);
    const auto street = scenegen::make_street_camera({10, 5, 1.7}, 0.0);
    expect(street, {30, 5, 1.7}, 704.0, 188.0);
    expect(street, {30, 3, 1.7}, 704.0 + 552.55 * 2.0 / 20.0, 188.0);
    expect(street, {30, 5, -0.3}, 704.0, 188.0 + 552.55 * 2.0 / 20.0);
    behindRejected = behindRejected && !scenegen::project_point({5, 5, 1.7}, street);
    const auto turned = scenegen::make_street_camera({10, 5, 1.7}, std::acos(-1.0) / 2.0);
    expect(turned, {12, 25, 1.7}, 704.0 + 552.55 * 2.0 / 20.0, 188.0);

    verdict("5", "data pipeline semantics",
            identical && distinct && regionMismatch == 0 && projErr <= 1e-12 && behindRejected,
            std::string("datasets ") + (identical ? "byte-identical" : "DIFFER") + " per seed" +
                (distinct ? "" : " (seeds collide)") + ", region grid 101x101 mismatches " +
                std::to_string(regionMismatch) + ", projection err " + fmt("%.1e", projErr) + " <= 1e-12");
}

// --- 6, 7, 8 ----------------------------------------------------------------------------

struct Evaluated {
    std::vector<RecallReport> matrix; // default task matrix at d = 20
    std::vector<RecallReport> exact;  // cross-modal tasks under the exact-location criterion
    double meanCrossModal = 0.0;
};

Evaluated evaluate(const train::Checkpoint& ck, const std::vector<const scenegen::SceneTriplet*>& test,
                   std::size_t hints) {
    const auto dbs = retrieval::build_all(test, ck.params, train::model_options(ck.config), {hints, 0});
    Evaluated e;
    e.matrix = retrieval::run_task_matrix(dbs, 20.0, {1, 3, 5});
    e.meanCrossModal = retrieval::mean_cross_modal_r1(e.matrix);
    for (const auto& t : retrieval::default_tasks())
        if (t.cross_modal())
            e.exact.push_back(retrieval::recall_at_k(dbs.at(t.query), dbs.at(t.db), {1, 3, 5}, Criterion::exact(), false,
                                                     t.name()));
    return e;
}

const RecallReport& find(const std::vector<RecallReport>& reports, const std::string& task) {
    for (const auto& r : reports)
        if (r.task == task) return r;
    raise(ErrorKind::lookup, "no report for " + task);
}

void print_reports(const char* label, const std::vector<RecallReport>& reports) {
    std::printf("      %-22s", label);
    for (const auto& r : reports) std::printf(" %s %.3f/%.3f/%.3f", r.task.c_str(), r.recall.at(1), r.recall.at(3), r.recall.at(5));
    std::printf("\n");
}

void reference_experiment(bool withAblations, bool withHints) {
    const auto t0 = std::chrono::steady_clock::now();
    const scenegen::WorldConfig wc; // seed 42, 768 scenes -> 512 / 128 / 128
    const auto data = scenegen::generate_world(wc);
    train::TrainConfig tc; // D = 64 and the remaining defaults
    tc.epochsInstance = 10;
    tc.epochsScene = 10;
    const auto pre = train::pretrain_instance_models(data, tc);
    const auto full = train::train_scene_model(data, &pre, tc);
    const auto test = train::split_view(data, scenegen::Split::test);
    const auto ev = evaluate(full, test, tc.hintsPerScene);
    const double refSecs = seconds_since(t0);
    std::printf("      reference: %zu train / %zu test scenes, kept scene epoch %zu, %.0f s\n",
                train::split_view(data, scenegen::Split::train).size(), test.size(), full.epoch, refSecs);
    print_reports("d=20 matrix R@1/3/5:", ev.matrix);
    print_reports("exact location:", ev.exact);

    constexpr double kChanceFloor = 20.0 / 128.0;
    double minExact = 1.0;
    std::string minTask;
    for (const auto& r : ev.exact)
        if (r.recall.at(1) < minExact) {
            minExact = r.recall.at(1);
            minTask = r.task;
        }
    verdict("6a", "cross-modal R@1 above 20x chance", minExact > kChanceFloor,
            "min exact-location R@1 " + fmt("%.3f", minExact) + " (" + minTask + ") > " + fmt("%.3f", kChanceFloor) +
                ", headroom " + fmt("%.2f", minExact / kChanceFloor) + "x");

    const double i2i = find(ev.matrix, "I2I").recall.at(1), p2p = find(ev.matrix, "P2P").recall.at(1);
    verdict("6b", "uni-modal R@1 at 20 m", i2i >= 0.9 && p2p >= 0.9,
            "I2I " + fmt("%.3f", i2i) + ", P2P " + fmt("%.3f", p2p) + " >= 0.9");

    std::vector<RecallReport> all = ev.matrix;
    all.insert(all.end(), ev.exact.begin(), ev.exact.end());

    if (withHints) {
        std::vector<std::array<double, 3>> textAvg;
        for (std::size_t h : {6, 5, 4}) {
            const auto e = h == 6 ? ev : evaluate(full, test, h);
            if (h != 6) all.insert(all.end(), e.matrix.begin(), e.matrix.end());
            std::array<double, 3> avg{};
            std::size_t n = 0;
            for (const auto& r : e.matrix)
                if (retrieval::task_from_name(r.task).involves_text()) {
                    avg[0] += r.recall.at(1);
                    avg[1] += r.recall.at(3);
                    avg[2] += r.recall.at(5);
                    ++n;
                }
            for (double& a : avg) a /= static_cast<double>(n);
            textAvg.push_back(avg);
            std::printf("      hints %zu: text-task mean R@1/3/5 %.3f/%.3f/%.3f\n", h, avg[0], avg[1], avg[2]);
        }
        bool nonIncreasing = true;
        for (std::size_t i = 1; i < textAvg.size(); ++i)
            for (std::size_t k = 0; k < 3; ++k) nonIncreasing = nonIncreasing && textAvg[i][k] <= textAvg[i - 1][k];
        verdict("8", "hint robustness 6 -> 5 -> 4", nonIncreasing,
                "text-task mean R@1 " + fmt("%.3f", textAvg[0][0]) + " -> " + fmt("%.3f", textAvg[1][0]) + " -> " +
                    fmt("%.3f", textAvg[2][0]) + " (R@3, R@5 also non-increasing: " + (nonIncreasing ? "yes" : "no") +
                    ")");
    }

    bool nested = true;
    for (const auto& r : all) nested = nested && r.recall.at(1) <= r.recall.at(3) && r.recall.at(3) <= r.recall.at(5);
    verdict("6c", "R@1 <= R@3 <= R@5", nested, std::to_string(all.size()) + " reports checked");
    verdict("6t", "reference runtime", refSecs < 1200.0, fmt("%.0f", refSecs) + " s < 1200 s");

    if (!withAblations) return;
    train::TrainConfig maxCfg = tc;
    maxCfg.pool = scene::PoolMode::max;
    const double maxPool = evaluate(train::train_scene_model(data, &pre, maxCfg), test, 6).meanCrossModal;

    train::TrainConfig noUvCfg = tc;
    noUvCfg.useUv = false;
    const auto preNoUv = train::pretrain_instance_models(data, noUvCfg);
    const double noUv = evaluate(train::train_scene_model(data, &preNoUv, noUvCfg), test, 6).meanCrossModal;

    train::TrainConfig noPreCfg = tc;
    noPreCfg.pretrain = false;
    const double noPre = evaluate(train::train_scene_model(data, nullptr, noPreCfg), test, 6).meanCrossModal;

    const double fullMean = ev.meanCrossModal;
    const bool order = maxPool <= fullMean && noUv <= fullMean && noPre <= fullMean;
    const bool strict = maxPool < fullMean || noUv < fullMean || noPre < fullMean;
    verdict("7", "ablation directions", order && strict,
            "mean cross-modal R@1 full " + fmt("%.3f", fullMean) + " vs max-pool " + fmt("%.3f", maxPool) +
                ", no-uv " + fmt("%.3f", noUv) + ", no-pretrain " + fmt("%.3f", noPre));
}

} // namespace

int main(int argc, char** argv) {
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) only.insert(argv[i]);
    auto want = [&](const char* id) { return only.empty() || only.count(id) > 0; };
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (want("1")) gradient_integrity();
        if (want("2")) sap_contracts();
        if (want("3")) loss_oracles();
        if (want("4")) retrieval_exactness();
        if (want("5")) pipeline_semantics();
        if (want("6") || want("7") || want("8")) reference_experiment(want("7"), want("8"));
    } catch (const std::exception& e) {
        std::printf("FAIL  --  unexpected error: %s\n", e.what());
        return 1;
    }
    std::printf("%d failing criteria, %.0f s total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
