// Copyright 2026-present the ris-locate project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "risloc/kernels.hpp"

#include <atomic>

namespace risloc::kernels {

extern const Ops kScalarOps;
#if defined(__x86_64__) || defined(_M_X64)
extern const Ops kAvx2Ops;
#endif

namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::vector<const Ops*> build_available() {
    std::vector<const Ops*> v{&kScalarOps};
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2_fma()) v.push_back(&kAvx2Ops);
#endif
    return v;
}

std::atomic<const Ops*> g_active{nullptr};

const Ops* pick_default() {
    const auto& v = available();
    return v.back();  // widest variant the CPU supports
}

}  // namespace

const std::vector<const Ops*>& available() {
    static const std::vector<const Ops*> v = build_available();
    return v;
}

const Ops& active() {
    const Ops* ops = g_active.load(std::memory_order_acquire);
    if (!ops) {
        ops = pick_default();
        g_active.store(ops, std::memory_order_release);
    }
    return *ops;
}

const Ops& scalar() { return kScalarOps; }

bool force_variant(const std::string& name) {
    for (const Ops* ops : available()) {
        if (name == ops->name) {
            g_active.store(ops, std::memory_order_release);
            return true;
        }
    }
    return false;
}

}  // namespace risloc::kernels
