#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sdgl {

struct Ablations {
  bool no_gloss = false;   // drop the graph regularization term from the loss
  bool no_dyadj = false;   // remove the dynamic graph branch
  bool no_ifm = false;     // dynamic graph from the projected input only
  bool ifm_plus = false;   // fusion replaced by a sum

  bool any() const { return no_gloss || no_dyadj || no_ifm || ifm_plus; }
  std::string to_string() const;  // comma list, "none" when empty
};

// Every tunable of the model and its training run. Zero-valued `nodes`,
// `head_dim` and `mlp_hidden` are resolved at build time (from the dataset,
// embed_dim / heads, and nodes respectively).
struct ModelConfig {
  std::size_t nodes = 0;
  std::size_t window = 19;
  std::size_t horizon = 3;
  std::size_t embed_dim = 16;
  std::size_t heads = 4;
  std::size_t head_dim = 0;
  double dilation_growth = 2.0;
  std::size_t layers = 2;
  std::size_t depth = 2;
  std::size_t channels = 16;
  std::size_t skip_channels = 32;
  std::size_t end_channels = 32;
  std::size_t mlp_hidden = 0;
  double lambda = 0.05;
  double gamma = 0.1;
  double momentum = 0.9;
  double keep_prob = 0.9;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  Ablations ablate;

  std::size_t resolved_head_dim() const { return head_dim ? head_dim : embed_dim / heads; }
  std::size_t resolved_mlp_hidden() const { return mlp_hidden ? mlp_hidden : nodes; }
  std::vector<std::size_t> dilations() const;
  std::size_t receptive_field() const;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // "key = value" lines; doubles carry 17 significant digits.
  std::string to_text() const;
  // Applies one key/value; unknown keys and malformed values throw.
  void set(const std::string& key, const std::string& value);
  // Applies every "key = value" line; '#' starts a comment.
  void apply_text(const std::string& text);
};

}  // namespace sdgl
