#include "uniloc/scene/sap.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/nn.hpp"

#include <cmath>
#include <string>

namespace uniloc::scene {

namespace {

std::string attn_prefix(Modality m, std::size_t layer) {
    return "sap/" + std::string(modality_key(m)) + "/attn" + std::to_string(layer);
}

std::string pool_prefix(Modality m) { return "sap/" + std::string(modality_key(m)) + "/pool"; }

void check_mask(const std::vector<bool>& mask, std::size_t rows) {
    if (mask.size() != rows || rows % kMaxInstances != 0)
        raise(ErrorKind::dimension, "mask of " + std::to_string(mask.size()) + " entries for " +
                                        std::to_string(rows) + " rows (groups of 12)");
}

} // namespace

std::string_view modality_key(Modality m) noexcept {
    switch (m) {
    case Modality::text: return "text";
    case Modality::image: return "image";
    case Modality::point: return "point";
    }
    return "text";
}

Modality modality_from_key(std::string_view key) {
    for (Modality m : kAllModalities)
        if (modality_key(m) == key) return m;
    raise(ErrorKind::lookup, "unknown modality '" + std::string(key) + "'");
}

SceneInstanceSet make_instance_set(const Matrix& rows, Modality modality) {
    if (rows.rows() == 0) raise(ErrorKind::emptyScene, "scene has no instances");
    if (rows.rows() > kMaxInstances)
        raise(ErrorKind::contract, "scene has " + std::to_string(rows.rows()) + " instances, max is 12");
    SceneInstanceSet set{Matrix(kMaxInstances, rows.cols()), std::vector<bool>(kMaxInstances, false), modality};
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto src = rows.row_span(r);
        std::copy(src.begin(), src.end(), set.F.row_span(r).begin());
        set.mask[r] = true;
    }
    return set;
}

void init_sap(ParamStore& store, Modality m, std::size_t dim, const SapConfig& cfg, std::uint64_t seed) {
    const std::size_t ffn = cfg.ffnHidden ? cfg.ffnHidden : 2 * dim;
    for (std::size_t l = 0; l < cfg.depth_for(m); ++l) numcore::add_mhsa_block(store, attn_prefix(m, l), dim, ffn, seed);
    numcore::add_mlp3(store, pool_prefix(m), dim, dim, 1, seed);
}

Var sap_attention(Graph& g, Var f, const std::vector<bool>& mask, Modality m, const SapConfig& cfg) {
    check_mask(mask, g.value(f).rows());
    Var t = mask_rows(g, f, mask);
    for (std::size_t l = 0; l < cfg.depth_for(m); ++l)
        t = numcore::mhsa_block_forward(g, t, mask, attn_prefix(m, l), cfg.heads, kMaxInstances);
    return t;
}

Var sap_weights(Graph& g, Var t, const std::vector<bool>& mask, Modality m) {
    check_mask(mask, g.value(t).rows());
    return masked_group_softmax(g, numcore::mlp3_forward(g, t, pool_prefix(m)), mask, kMaxInstances);
}

Var sap_pool(Graph& g, Var t, Var w) { return l2_normalize_rows(g, group_weighted_sum(g, t, w, kMaxInstances)); }

Var scene_descriptors(Graph& g, Var instances, const std::vector<std::size_t>& counts, Modality m,
                      const SapConfig& cfg) {
    std::vector<std::size_t> slots;
    slots.reserve(g.value(instances).rows());
    std::vector<bool> mask(counts.size() * kMaxInstances, false);
    std::vector<std::vector<std::size_t>> groups(counts.size());
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] == 0) raise(ErrorKind::emptyScene, "scene " + std::to_string(b) + " has no instances");
        if (counts[b] > kMaxInstances)
            raise(ErrorKind::contract, "scene has " + std::to_string(counts[b]) + " instances, max is 12");
        for (std::size_t i = 0; i < counts[b]; ++i) {
            slots.push_back(b * kMaxInstances + i);
            mask[b * kMaxInstances + i] = true;
            groups[b].push_back(b * kMaxInstances + i);
        }
    }
    if (slots.size() != g.value(instances).rows())
        raise(ErrorKind::dimension, "instance rows do not match scene counts");
    const Var padded = scatter_rows(g, instances, std::move(slots), counts.size() * kMaxInstances);
    const Var t = sap_attention(g, padded, mask, m, cfg);
    if (cfg.pool == PoolMode::max) return l2_normalize_rows(g, group_max(g, t, std::move(groups)));
    return sap_pool(g, t, sap_weights(g, t, mask, m));
}

Matrix sap_attention(const SceneInstanceSet& set, const ParamStore& store, const SapConfig& cfg) {
    Graph g(store);
    return g.value(sap_attention(g, g.constant(set.F), set.mask, set.modality, cfg));
}

std::vector<double> sap_weights(const Matrix& t, const std::vector<bool>& mask, const ParamStore& store,
                                Modality m) {
    Graph g(store);
    const auto& w = g.value(sap_weights(g, g.constant(t), mask, m));
    return {w.data().begin(), w.data().end()};
}

std::vector<double> sap_pool(const Matrix& t, const std::vector<double>& w) {
    if (w.size() != t.rows()) raise(ErrorKind::dimension, "weights do not match rows");
    ParamStore none;
    Graph g(none);
    const Var sum = group_weighted_sum(g, g.constant(t), g.constant(Matrix(w.size(), 1, w)), t.rows());
    const auto& f = g.value(l2_normalize_rows(g, sum));
    return {f.data().begin(), f.data().end()};
}

std::vector<double> scene_descriptor(const SceneInstanceSet& set, const ParamStore& store, const SapConfig& cfg) {
    Graph g(store);
    Var t = sap_attention(g, g.constant(set.F), set.mask, set.modality, cfg);
    Var f;
    if (cfg.pool == PoolMode::max) {
        std::vector<std::vector<std::size_t>> groups(1);
        for (std::size_t i = 0; i < set.mask.size(); ++i)
            if (set.mask[i]) groups[0].push_back(i);
        if (groups[0].empty()) raise(ErrorKind::emptyScene, "all instance slots are masked");
        f = l2_normalize_rows(g, group_max(g, t, std::move(groups)));
    } else {
        f = sap_pool(g, t, sap_weights(g, t, set.mask, set.modality));
    }
    const auto& v = g.value(f);
    return {v.data().begin(), v.data().end()};
}

} // namespace uniloc::scene
