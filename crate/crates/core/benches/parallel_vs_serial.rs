// SPDX-License-Identifier: Apache-2.0
//! Serial vs rayon execution of the two hot loops: the calibration error
//! profile (one job per chip) and the identification fan-out (one job per
//! chip and trial). Build with `--no-default-features` to see the fallback
//! path, where both policies run serially.

use adder_leak::calibration::ErrorProfile;
use adder_leak::experiment::generate_vectors;
use adder_leak::netlist::AdderKind;
use adder_leak::timedsim::{run_trace_multi, PrevStatePolicy, Trial};
use adder_leak::variation::{sample_population, DelayModel};
use adder_leak::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const POLICIES: [(&str, Exec); 2] = [("serial", Exec::Serial), ("parallel", Exec::Parallel)];

fn error_profile(c: &mut Criterion) {
    let model = DelayModel::default();
    let mut group = c.benchmark_group("error_profile");
    group.sample_size(10);
    for kind in AdderKind::ALL {
        let netlist = kind.build(32).unwrap();
        let chips = sample_population(&model, &netlist, 8, 1, Exec::Serial).unwrap();
        let vectors = generate_vectors(500, 32, 2);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, kind), &exec, |b, &exec| {
                b.iter(|| {
                    ErrorProfile::measure(&netlist, &chips, &model, &vectors, true, 3, exec)
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn trace_fan_out(c: &mut Criterion) {
    let model = DelayModel::default();
    let netlist = AdderKind::Rca.build(32).unwrap();
    let chips = sample_population(&model, &netlist, 8, 1, Exec::Serial).unwrap();
    let vectors = generate_vectors(500, 32, 2);
    let periods = [260.0, 300.0, 340.0];
    let mut group = c.benchmark_group("trace_fan_out");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| {
                exec.map_range(chips.len() * 2, |j| {
                    let trial = Trial {
                        id: j as u32 % 2,
                        noise_seed: 5,
                    };
                    run_trace_multi(
                        &netlist,
                        &chips[j / 2],
                        &model,
                        &vectors,
                        &periods,
                        PrevStatePolicy::Sequential,
                        trial,
                    )
                    .unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, error_profile, trace_fan_out);
criterion_main!(benches);
