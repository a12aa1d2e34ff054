//! Result files: JSON reports, curve CSVs, and tidy plot data.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kinwave_core::curves::CumulativeCurve;
use kinwave_core::loading::{DepartureProfile, LoadingResult};
use kinwave_core::network::Network;
use kinwave_core::solvers::{integrate_against, CostProfile};
use serde::Serialize;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn create_file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create_file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn write_curve(&self, name: &str, curve: &CumulativeCurve) -> Result<()> {
        let mut w = self.create_file(name)?;
        curve.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Aggregate arc curves and per-route departures and arrivals; with
    /// `compositions`, also each route's share of every arc on its path.
    pub fn write_curves(&self, network: &Network, loading: &LoadingResult, compositions: bool) -> Result<()> {
        for (a, flow) in loading.arcs.iter().enumerate() {
            self.write_curve(&format!("curves/arc{a}_entry.csv"), &flow.entry)?;
            self.write_curve(&format!("curves/arc{a}_exit.csv"), &flow.exit)?;
        }
        for r in 0..network.routes().len() {
            self.write_curve(&format!("curves/route{r}_departure.csv"), &loading.departures[r])?;
            self.write_curve(&format!("curves/route{r}_arrival.csv"), loading.arrivals(r))?;
            if compositions {
                let path = &network.paths()[network.routes()[r].path];
                for (flow, a) in loading.compositions[r].iter().zip(&path.arcs) {
                    self.write_curve(&format!("curves/route{r}_arc{a}_entry.csv"), &flow.entry)?;
                    self.write_curve(&format!("curves/route{r}_arc{a}_exit.csv"), &flow.exit)?;
                }
            }
        }
        Ok(())
    }

    pub fn write_plot_data(&self, rows: &[PlotRow]) -> Result<()> {
        let mut w = self.create_file("plot_data.csv")?;
        writeln!(w, "series,t,value")?;
        for row in rows {
            writeln!(w, "{},{:.16e},{:.16e}", row.series, row.t, row.value)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct PlotRow {
    pub series: String,
    pub t: f64,
    pub value: f64,
}

/// Long-format series for external plotting: cumulative curves, departure
/// rates as steps, and, when given, sampled route costs.
pub fn plot_rows(
    network: &Network,
    profile: &DepartureProfile,
    loading: &LoadingResult,
    costs: Option<&CostProfile>,
) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    let mut curve = |series: String, c: &CumulativeCurve| {
        rows.extend(c.points().map(|(t, value)| PlotRow {
            series: series.clone(),
            t,
            value,
        }))
    };
    for (a, flow) in loading.arcs.iter().enumerate() {
        curve(format!("arc{a}.entry"), &flow.entry);
        curve(format!("arc{a}.exit"), &flow.exit);
    }
    for r in 0..network.routes().len() {
        curve(format!("route{r}.departure"), &loading.departures[r]);
        curve(format!("route{r}.arrival"), loading.arrivals(r));
    }
    for (r, rates) in profile.rates.iter().enumerate() {
        for (l, &u) in rates.iter().enumerate() {
            for t in [profile.bin_start(l), profile.bin_start(l + 1)] {
                rows.push(PlotRow {
                    series: format!("route{r}.rate"),
                    t,
                    value: u,
                });
            }
        }
    }
    if let Some(costs) = costs {
        for (r, values) in costs.values.iter().enumerate() {
            for (i, &value) in values.iter().enumerate() {
                rows.push(PlotRow {
                    series: format!("route{r}.cost"),
                    t: costs.sample_time(i),
                    value,
                });
            }
        }
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct CostSummary {
    pub total_cost: f64,
    pub groups: Vec<GroupCost>,
}

#[derive(Debug, Serialize)]
pub struct GroupCost {
    pub departure: f64,
    pub arrival: f64,
    pub total: f64,
}

pub fn cost_summary(network: &Network, loading: &LoadingResult) -> CostSummary {
    let mut groups: Vec<GroupCost> = network
        .groups()
        .iter()
        .map(|_| GroupCost {
            departure: 0.0,
            arrival: 0.0,
            total: 0.0,
        })
        .collect();
    for (r, route) in network.routes().iter().enumerate() {
        let g = &network.groups()[route.group];
        let entry = &mut groups[route.group];
        entry.departure += integrate_against(&g.departure_cost, &loading.departures[r]);
        entry.arrival += integrate_against(&g.arrival_cost, loading.arrivals(r));
    }
    for g in &mut groups {
        g.total = g.departure + g.arrival;
    }
    CostSummary {
        total_cost: groups.iter().map(|g| g.total).sum(),
        groups,
    }
}
