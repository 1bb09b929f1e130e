#pragma once

#include <cstdint>
#include <future>
#include <memory>
#include <vector>

#include <torch/types.h>

#include "ffgan/glyph_data.hpp"

namespace ffgan {

/// One handed-out batch. Consumers get shared ownership of an immutable value.
struct Batch {
  std::uint64_t epoch = 0;
  std::vector<std::size_t> indices;  // positions in the iterator's item list
  torch::Tensor pixels;              // N x 1 x size x size, float32
};

struct BatchOptions {
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  bool drop_last = false;
  bool prefetch = false;  // assemble the next batch on a background thread
};

/// Endless, repeatable stream of shuffled batches. Epoch e uses a permutation
/// drawn from fork_seed(seed, e), so the stream is a pure function of the
/// seed and position and can be resumed with seek().
class BatchIterator {
 public:
  BatchIterator(std::vector<GlyphImage> items, BatchOptions options);
  BatchIterator(const FontDataset& dataset, Partition partition, BatchOptions options);
  ~BatchIterator();

  BatchIterator(const BatchIterator&) = delete;
  BatchIterator& operator=(const BatchIterator&) = delete;

  std::size_t item_count() const { return items_->size(); }
  std::size_t batches_per_epoch() const;

  std::shared_ptr<const Batch> next();

  /// Moves to the batch with the given global index (0 is the first batch of
  /// epoch 0).
  void seek(std::uint64_t global_batch);
  std::uint64_t position() const { return position_; }

 private:
  std::shared_ptr<const Batch> assemble(std::uint64_t global_batch) const;
  void start_prefetch();

  std::shared_ptr<const std::vector<GlyphImage>> items_;
  BatchOptions options_;
  std::uint64_t position_ = 0;
  std::future<std::shared_ptr<const Batch>> pending_;
  std::uint64_t pending_position_ = 0;
};

}  // namespace ffgan
