#pragma once

#include <string>
#include <vector>

#include "mrulab/bmru.hpp"
#include "mrulab/lru.hpp"
#include "mrulab/rng.hpp"
#include "mrulab/tensor.hpp"

namespace mrulab {

// Recurrent block: batch norm -> cell -> GLU -> skip, at model dimension H
// with cell state dimension N. Cells receive the H(+positional) input, update
// their N-dimensional state, and project back to H. "hybrid" runs a BMRU and
// an LRU side by side on the same input, each at half width, outputs
// concatenated.
enum class CellKind { bmru, lru, hybrid };
enum class Pooling { last_timestep, mean };
enum class RunMode { train, eval };

struct BlockConfig {
    CellKind cell_kind = CellKind::bmru;
    size_t model_dim = 64;    // H
    size_t state_dim = 64;    // N
    bool bidirectional = false;
    size_t positional_dim = 0;  // 0 = none
};

struct NetworkConfig {
    std::vector<BlockConfig> blocks;
    size_t head_layers = 2;  // fully connected layers after the last block
    Pooling pooling = Pooling::last_timestep;
    size_t input_dim = 1;
    size_t output_dim = 1;
    float alpha_surr = 1.0f;
    double lru_r_min = 0.0;
    double lru_r_max = 0.99;
    double lru_theta_max = 6.283185307179586;
};

// pe[t, 2k] = sin(t / 10000^(2k/dim)), pe[t, 2k+1] = cos(same); dim even.
Tensor positional_encoding(size_t steps, size_t dim);

struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;        // null for non-trainable state
    bool bmru_group;     // weight-decay group
    bool trainable;
};

// ---------------------------------------------------------------------------
// Layers. forward() fills the layer's cache; backward() consumes it together
// with the same input tensor the caller fed forward.
// ---------------------------------------------------------------------------

struct LinearLayer {
    Tensor w;  // [out, in]
    Tensor b;  // [out]
    Tensor dw, db;

    void init(Rng& rng, size_t in, size_t out);
    Tensor forward(const Tensor& x) const;  // [R, in] -> [R, out]
    // Accumulates dw/db; returns dx.
    Tensor backward(const Tensor& x, const Tensor& dy);
};

struct BatchNormLayer {
    Tensor scale, shift;  // learnable
    Tensor dscale, dshift;
    Tensor running_mean, running_var;
    float eps = 1e-5f;
    float momentum = 0.1f;

    struct Cache {
        RunMode mode = RunMode::train;
        Tensor xhat;
        std::vector<float> inv_std;
    };

    void init(size_t features);
    Tensor forward(const Tensor& x, RunMode mode, Cache& cache);
    Tensor backward(const Cache& cache, const Tensor& dy);
};

struct GluLayer {
    LinearLayer proj;  // [2H, H]

    struct Cache {
        Tensor u, sv;  // split halves: u and sigmoid(v)
    };

    void init(Rng& rng, size_t width);
    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& x, const Cache& cache, const Tensor& dy);
};

// One direction of a block's cell stage.
struct CellSet {
    bool has_bmru = false;
    bool has_lru = false;
    BmruParams bmru;
    LinearLayer bmru_out;  // N -> its share of H
    LruParams lru;

    struct Grads {
        Tensor dw_x, db_x, dw_beta, db_beta, dalpha;
        Tensor dnu, dtheta, dgamma, db_re, db_im, dc_re, dc_im, dd;
    };
    Grads g;

    struct Cache {
        size_t steps_hint = 0;  // T; rows of the batched input are B*T
        std::vector<BmruForwardCache> bmru;  // per sample
        std::vector<LruForwardCache> lru;
    };

    void init(Rng& rng, const BlockConfig& cfg, size_t input_dim);
    size_t out_dim(const BlockConfig& cfg) const;
    // x [B,T,Min] -> [B,T,out_dim]; per-sample parallel.
    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& x, const Cache& cache, const Tensor& dy);
};

struct Block {
    BlockConfig cfg;
    BatchNormLayer bn;
    CellSet cells;          // forward direction
    CellSet cells_rev;      // reverse direction (bidirectional only)
    LinearLayer bidir_merge;  // [H, 2H]
    GluLayer glu;

    struct Cache {
        size_t steps_hint = 0;
        Tensor pe;            // [T, P]
        Tensor bn_in;         // x with positional columns appended
        BatchNormLayer::Cache bn;
        Tensor cell_in;       // BN output
        CellSet::Cache cellc;
        CellSet::Cache cellc_rev;
        Tensor cell_out;      // pre-GLU (post bidirectional merge)
        Tensor merge_in;      // [B,T,2H] concat of both directions
        GluLayer::Cache glu;
    };

    void init(Rng& rng, const BlockConfig& config);
    Tensor forward(const Tensor& x, RunMode mode, Cache& cache);
    Tensor backward(const Tensor& x, const Cache& cache, const Tensor& dy);
};

struct Network {
    NetworkConfig cfg;
    LinearLayer input_proj;
    std::vector<Block> blocks;
    std::vector<LinearLayer> head;

    struct Cache {
        Tensor x_flat;                   // [B*T, input_dim]
        Tensor proj_out;                 // [B,T,H]
        std::vector<Block::Cache> block;
        std::vector<Tensor> block_in;    // input to each block
        Tensor pooled;                   // [B, H]
        std::vector<Tensor> head_in;     // input to each head layer
        std::vector<Tensor> head_act;    // pre-GELU activations
        size_t batch = 0, steps = 0;
    };

    void init(Rng& rng, const NetworkConfig& config);
    // x [B, T, input_dim] -> predictions [B, output_dim]
    Tensor forward(const Tensor& x, RunMode mode, Cache& cache);
    void backward(const Cache& cache, const Tensor& dl_dpred);

    std::vector<ParamRef> params();
    void zero_grads();
    size_t param_count();
};

}  // namespace mrulab
