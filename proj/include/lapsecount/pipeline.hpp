#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lapsecount/features.hpp"
#include "lapsecount/lstm.hpp"
#include "lapsecount/partition.hpp"
#include "lapsecount/temporal.hpp"
#include "lapsecount/threads.hpp"

namespace lapsecount::pipe {

/// Fig. 3 pipeline: enumerate crops (caller decides flush), predict each,
/// join with overlap-averaged density.
inline double static_frame_count(const GrayImage& img, const feat::StaticModel& model,
                                 grid::PartitionConfig pcfg) {
    pcfg.validate(img.width, img.height);
    const auto crops = grid::enumerate_crops(img.width, img.height, pcfg);
    std::vector<double> estimates(crops.size());
    parallel_for(crops.size(), [&](std::size_t i) {
        estimates[i] = model.predict(feat::crop_pixels(img, crops[i]));
    });
    return grid::join_counts(estimates, pcfg, img.width, img.height,
                             grid::JoinMethod::OverlapAveragedDensity);
}

/// Either recurrent regressor behind one prediction surface.
struct DynamicModel {
    enum class Kind { Lstm, BiLstm };

    Kind kind = Kind::Lstm;
    rnn::LstmStack uni;
    rnn::BiLstmStack bi;

    DynamicModel() = default;
    DynamicModel(Kind k, std::size_t input_dim, std::size_t hidden)
        : kind(k), uni(input_dim, hidden), bi(input_dim, hidden) {}

    void init(Rng& rng) {
        if (kind == Kind::Lstm)
            uni.init(rng);
        else
            bi.init(rng);
    }

    std::size_t input_dim() const { return kind == Kind::Lstm ? uni.input_dim() : bi.input_dim(); }
    std::size_t hidden() const { return kind == Kind::Lstm ? uni.hidden() : bi.hidden(); }
    std::string arch() const { return kind == Kind::Lstm ? uni.arch() : bi.arch(); }

    ParamList params() { return kind == Kind::Lstm ? uni.params() : bi.params(); }

    double predict(const timeflow::TemporalBlock& block) const {
        return kind == Kind::Lstm ? uni.forward(block) : bi.forward(block);
    }
};

/// Block for the frame at `index` out of a full per-location feature series:
/// the tw entries ending at `index`, front-padded when the series is shorter.
inline timeflow::TemporalBlock block_from_series(
    std::span<const feat::FeatureVector> series, std::size_t index,
    const timeflow::TemporalConfig& cfg, std::size_t m) {
    cfg.validate();
    if (index >= series.size()) throw std::invalid_argument("block_from_series: index out of range");
    timeflow::TemporalBlock block;
    block.tw = cfg.tw;
    block.m = m;
    block.n_real = std::min(index + 1, cfg.tw);
    block.rows.assign(cfg.tw * m, cfg.padding_value);
    for (std::size_t k = 0; k < block.n_real; ++k) {
        const auto& v = series[index - k];
        if (v.size() != m) throw std::invalid_argument("block_from_series: feature length != m");
        std::copy(v.begin(), v.end(), block.rows.begin() + (cfg.tw - 1 - k) * m);
    }
    return block;
}

/// Fig. 4 pipeline in streaming form: per frame, extract crop features,
/// append to per-location histories, build blocks, predict, join. Emits a
/// count from the first frame onward; memory stays bounded by
/// crops_per_frame x tw x m.
class DynamicCounter {
public:
    DynamicCounter(const feat::StaticModel* extractor, const DynamicModel* model,
                   grid::PartitionConfig pcfg, timeflow::TemporalConfig tcfg)
        : extractor_(extractor), model_(model), pcfg_(pcfg), tcfg_(tcfg) {
        tcfg_.validate();
        if (model_->input_dim() != extractor_->feature_size())
            throw std::invalid_argument("DynamicCounter: feature dim != model input dim");
    }

    double process_frame(const GrayImage& img, double timestamp_h) {
        pcfg_.validate(img.width, img.height);
        const auto crops = grid::enumerate_crops(img.width, img.height, pcfg_);
        if (histories_.empty()) {
            crop_grid_ = crops;
            histories_.assign(crops.size(), timeflow::FeatureHistory(tcfg_.tw));
        } else if (crops.size() != crop_grid_.size()) {
            throw std::invalid_argument("DynamicCounter: frame geometry changed mid-stream");
        }
        const std::size_t m = extractor_->feature_size();

        std::vector<feat::FeatureVector> features(crops.size());
        parallel_for(crops.size(), [&](std::size_t i) {
            features[i] = extractor_->extract(feat::crop_pixels(img, crops[i]));
        });
        for (std::size_t i = 0; i < crops.size(); ++i)
            histories_[i].append(timestamp_h, std::move(features[i]));

        std::vector<double> estimates(crops.size());
        parallel_for(crops.size(), [&](std::size_t i) {
            estimates[i] = model_->predict(timeflow::build_block(histories_[i], tcfg_, m));
        });
        return grid::join_counts(estimates, pcfg_, img.width, img.height,
                                 grid::JoinMethod::OverlapAveragedDensity);
    }

private:
    const feat::StaticModel* extractor_;
    const DynamicModel* model_;
    grid::PartitionConfig pcfg_;
    timeflow::TemporalConfig tcfg_;
    std::vector<grid::CropRef> crop_grid_;
    std::vector<timeflow::FeatureHistory> histories_;
};

}  // namespace lapsecount::pipe
