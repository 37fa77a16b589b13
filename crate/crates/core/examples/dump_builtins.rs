//! Print per-hour dispatch and intensity tables for the built-in systems.

use co2flow::asis::compute_asis;
use co2flow::dispatch::solve_dispatch;
use co2flow::factory::{make_builtin, BUILTIN_NAMES};
use co2flow::whatif::compute_whatif;
use co2flow::EnergySystem64;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let names: Vec<&str> = if args.is_empty() {
        BUILTIN_NAMES.to_vec()
    } else {
        args.iter().map(|s| s.as_str()).collect()
    };
    for name in names {
        let system: EnergySystem64 = make_builtin(name).unwrap();
        let dispatch = solve_dispatch(&system).unwrap();
        let asis = compute_asis(&system, &dispatch).unwrap();
        let whatif = compute_whatif(&system, &dispatch).unwrap();

        println!("=== {name} ===");
        println!(
            "cost {:.3}  m_tot {:.3} t  iters {}  trace_res {:.2e}  cons_rel {:.2e}",
            dispatch.cost,
            dispatch.m_tot_t,
            dispatch.sol.iterations,
            asis.residual,
            asis.conservation.rel_residual
        );
        print!("{:>3}", "t");
        for (k, f) in dispatch.layout.out_flows.iter().enumerate() {
            let _ = k;
            print!(
                " {:>9}",
                format!("{}>{}", &system.processes[f.process].id, &system.commodities[f.commodity].id[..2.min(system.commodities[f.commodity].id.len())])
            );
        }
        for &p in &dispatch.layout.storages {
            print!(" {:>8}", format!("SL:{}", &system.processes[p].id[..4.min(system.processes[p].id.len())]));
        }
        for c in &system.commodities {
            print!(" {:>8}", format!("I:{}", &c.id[..4.min(c.id.len())]));
        }
        for &p in &dispatch.layout.storages {
            print!(" {:>8}", format!("Is:{}", &system.processes[p].id[..4.min(system.processes[p].id.len())]));
        }
        for &ci in &whatif.commodities {
            print!(" {:>8}", format!("W:{}", &system.commodities[ci].id[..4.min(system.commodities[ci].id.len())]));
        }
        println!();
        for t in 0..system.steps {
            print!("{:>3}", t);
            for k in 0..dispatch.layout.out_flows.len() {
                print!(" {:>9.4}", dispatch.e_out[k][t]);
            }
            for k in 0..dispatch.layout.storages.len() {
                print!(" {:>8.4}", dispatch.levels[k][t]);
            }
            for ci in 0..system.commodities.len() {
                let flag = if asis.is_flagged_commodity(ci, t) { "*" } else { "" };
                print!(" {:>7.4}{}", asis.intensity[ci][t], if flag.is_empty() { " " } else { "*" });
            }
            for (k, &p) in dispatch.layout.storages.iter().enumerate() {
                let flag = if asis.is_flagged_storage(p, t) { "*" } else { " " };
                print!(" {:>7.4}{}", asis.storage_intensity[k][t], flag);
            }
            for &ci in &whatif.commodities {
                print!(" {:>8.4}", whatif.value_at(ci, t));
            }
            println!();
        }
        println!();
    }
}
