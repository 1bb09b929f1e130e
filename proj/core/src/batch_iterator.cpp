#include "ffgan/batch_iterator.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ffgan/errors.hpp"
#include "ffgan/rng.hpp"

namespace ffgan {
namespace {

std::vector<GlyphImage> copy_partition(const FontDataset& dataset, Partition partition) {
  std::vector<GlyphImage> out;
  for (const GlyphImage* img : dataset.partition_images(partition)) out.push_back(*img);
  return out;
}

}  // namespace

BatchIterator::BatchIterator(std::vector<GlyphImage> items, BatchOptions options)
    : items_(std::make_shared<const std::vector<GlyphImage>>(std::move(items))), options_(options) {
  if (items_->empty()) fail(ErrorKind::EmptyPartition, "batch iterator over an empty partition");
  if (options_.batch_size < 1) fail(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (options_.drop_last && items_->size() < options_.batch_size) {
    fail(ErrorKind::EmptyPartition, "partition of " + std::to_string(items_->size()) +
                                        " items yields no full batch of " + std::to_string(options_.batch_size));
  }
  start_prefetch();
}

BatchIterator::BatchIterator(const FontDataset& dataset, Partition partition, BatchOptions options)
    : BatchIterator(copy_partition(dataset, partition), options) {}

BatchIterator::~BatchIterator() {
  if (pending_.valid()) pending_.wait();
}

std::size_t BatchIterator::batches_per_epoch() const {
  const std::size_t n = items_->size(), b = options_.batch_size;
  return options_.drop_last ? n / b : (n + b - 1) / b;
}

std::shared_ptr<const Batch> BatchIterator::assemble(std::uint64_t global_batch) const {
  const std::size_t per_epoch = batches_per_epoch();
  const std::uint64_t epoch = global_batch / per_epoch;
  const std::size_t within = static_cast<std::size_t>(global_batch % per_epoch);

  std::vector<std::size_t> order(items_->size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(fork_seed(options_.seed, "batch.epoch", epoch));
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t begin = within * options_.batch_size;
  const std::size_t end = std::min(begin + options_.batch_size, order.size());
  auto batch = std::make_shared<Batch>();
  batch->epoch = epoch;
  batch->indices.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
  std::vector<const GlyphImage*> picked;
  for (std::size_t i : batch->indices) picked.push_back(&(*items_)[i]);
  batch->pixels = stack_images(std::span<const GlyphImage* const>(picked));
  return batch;
}

void BatchIterator::start_prefetch() {
  if (!options_.prefetch) return;
  pending_position_ = position_;
  // The task holds its own reference to the immutable item list.
  pending_ = std::async(std::launch::async, [items = items_, this, pos = position_] {
    (void)items;
    return assemble(pos);
  });
}

std::shared_ptr<const Batch> BatchIterator::next() {
  std::shared_ptr<const Batch> batch;
  if (pending_.valid() && pending_position_ == position_) {
    batch = pending_.get();
  } else {
    if (pending_.valid()) pending_.wait();
    batch = assemble(position_);
  }
  ++position_;
  start_prefetch();
  return batch;
}

void BatchIterator::seek(std::uint64_t global_batch) {
  if (pending_.valid()) pending_.wait();
  pending_ = {};
  position_ = global_batch;
  start_prefetch();
}

}  // namespace ffgan
