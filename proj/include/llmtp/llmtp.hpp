#pragma once

#include <llmtp/anchor.hpp>
#include <llmtp/error.hpp>
#include <llmtp/io.hpp>
#include <llmtp/kmeans.hpp>
#include <llmtp/metrics.hpp>
#include <llmtp/parallel.hpp>
#include <llmtp/pipeline.hpp>
#include <llmtp/prox.hpp>
#include <llmtp/solver.hpp>
#include <llmtp/tensor.hpp>
