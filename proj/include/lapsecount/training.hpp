#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lapsecount/adam.hpp"
#include "lapsecount/errors.hpp"
#include "lapsecount/loss.hpp"
#include "lapsecount/rng.hpp"
#include "lapsecount/threads.hpp"

namespace lapsecount::nn {

struct TrainOptions {
    LossKind loss = LossKind::L2;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
};

/// Minibatch Adam over items with a caller-supplied forward/backward.
///
/// `fwd_bwd(model, item, scale)` computes the item loss and accumulates
/// `scale`-weighted gradients into `model`'s params. Items inside a batch
/// are processed in fixed chunks of 8 (each chunk on a copied model), and
/// chunk gradients are reduced in chunk order, so results do not depend on
/// the thread count. Returns the per-epoch mean training loss.
template <typename Model, typename Item>
std::vector<double> train_minibatch(
    Model& model, std::span<const Item> items, const TrainOptions& opts,
    const std::function<double(Model&, const Item&, double)>& fwd_bwd) {
    if (items.empty()) throw std::invalid_argument("train_minibatch: no training items");
    constexpr std::size_t kChunk = 8;

    Rng shuffle_rng = Rng(opts.seed).derive(0x5bf);
    OptimState optim;
    optim.lr = opts.lr;

    ParamList master = model.params();
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> item_loss(items.size(), 0.0);
    std::vector<double> epoch_losses;
    epoch_losses.reserve(opts.epochs);

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t batch = std::min(opts.batch_size, order.size() - start);
            const double scale = 1.0 / static_cast<double>(batch);
            const std::size_t n_chunks = (batch + kChunk - 1) / kChunk;

            std::vector<Model> chunk_models(n_chunks, model);
            parallel_for(n_chunks, [&](std::size_t ci) {
                Model& cm = chunk_models[ci];
                const std::size_t lo = ci * kChunk;
                const std::size_t hi = std::min(batch, lo + kChunk);
                for (std::size_t b = lo; b < hi; ++b) {
                    const std::size_t idx = order[start + b];
                    item_loss[idx] = fwd_bwd(cm, items[idx], scale);
                }
            });
            for (std::size_t ci = 0; ci < n_chunks; ++ci) {
                ParamList chunk_params = chunk_models[ci].params();
                for (std::size_t pi = 0; pi < master.size(); ++pi) {
                    auto& dst = master[pi]->grad.data;
                    const auto& src = chunk_params[pi]->grad.data;
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                }
            }
            adam_step(master, optim);
        }
        double total = 0.0;
        for (double l : item_loss) total += l;
        const double mean_loss = total / static_cast<double>(items.size());
        if (!std::isfinite(mean_loss))
            throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
        epoch_losses.push_back(mean_loss);
    }
    return epoch_losses;
}

}  // namespace lapsecount::nn
