#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pclab/types.hpp"

namespace pclab {

enum class Split { Train, Validation, Test };
enum class Task { Regression, Classification };

// Sample rows plus targets. Classification datasets carry integer labels and
// one-hot targets; regression datasets leave `labels` empty.
struct Dataset {
    Mat inputs;    // n x d_in
    Mat targets;   // n x d_out
    std::vector<int> labels;
    Split split = Split::Train;

    int size() const { return static_cast<int>(inputs.rows()); }
    bool classification() const { return !labels.empty(); }

    Batch batch_rows(const std::vector<int>& rows) const;
    Batch whole() const;
};

// Parses a big-endian IDX image/label file pair (magics 0x00000803 and
// 0x00000801). Pixels are scaled to [0,1]; labels become one-hot targets.
// Malformed input raises ParseError with the offending byte offset.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 Split split = Split::Train);

// IDX writers for fixtures and round-trip checks. `images` is row-major,
// one element per pixel.
void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& images,
                      int count, int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// Splits off the last `validation_count` rows as the validation set.
std::pair<Dataset, Dataset> split_validation(const Dataset& full, int validation_count);

// Deterministic desk-scale data: inputs uniform in [0,1], targets produced by
// a hidden random teacher chain (its predictions for regression, their argmax
// as labels for classification), so the losses are reducible by construction.
// The teacher is derived from teacher_seed alone; sample_seed draws the rows,
// letting train/validation/test splits share one teacher.
Dataset synthetic_dataset(std::uint64_t teacher_seed, std::uint64_t sample_seed,
                          int n, int d_in, int d_out, Task task);

// Same, but with a caller-supplied teacher.
Dataset synthetic_from_teacher(const ChainSpec& teacher_spec,
                               const Parameters& teacher_params,
                               std::uint64_t seed, int n, Task task);

}  // namespace pclab
