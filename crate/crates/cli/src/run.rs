//! Subcommand execution and report emission.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use heisenberg_ibp::harness::{
    write_convergence_csv, write_csv, write_json, write_moment_csv, ConfigEcho, Setup,
};
use heisenberg_ibp::path::write_path_csv;
use heisenberg_ibp::{
    build_xi, convergence, enumerate_lambda, moment_diagnostics, verify_girsanov, verify_identity, verify_inversion,
    verify_path_ibp, Identity, TimeGrid, VerificationReport,
};

use crate::config::{Config, Overrides};
use crate::{CliError, VerifyKind};

#[derive(Debug, Clone, Copy)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
}

pub fn partitions(m: usize) -> Result<bool, CliError> {
    let parts = enumerate_lambda(m)?;
    println!("# |Λ_{m}| = {}", parts.len());
    for p in parts {
        println!("{p}");
    }
    Ok(true)
}

pub struct Context {
    config: Config,
    setup: Setup,
    source: serde_json::Value,
    out: PathBuf,
    formats: Formats,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Context {
    pub fn new(config_path: Option<&Path>, overrides: &Overrides, out: PathBuf, formats: Formats) -> Result<Self, CliError> {
        let mut config = Config::load(config_path)?;
        config.apply(overrides);
        config.validate()?;
        let setup = Setup::new(config.omega()?, config.grid()?, config.mc.clone());
        let source = config.to_json()?;
        fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
        let ctx = Self {
            config,
            setup,
            source,
            out,
            formats,
        };
        ctx.write_text("config.echo.toml", &ctx.config.to_toml()?)?;
        Ok(ctx)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(|e| io_err(&p, e))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| io_err(&p, e))
    }

    fn echo(&self, mut echo: ConfigEcho) -> ConfigEcho {
        echo.source = Some(self.source.clone());
        echo
    }

    fn json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if self.formats.json {
            write_json(self.create(name)?, value)?;
        }
        Ok(())
    }

    pub fn sample(&self) -> Result<bool, CliError> {
        for i in 0..self.config.experiment.sample.paths {
            let w = self.setup.noise(i as u64);
            let xi = build_xi(&w, &self.setup.omega)?;
            let name = format!("path_{i}.csv");
            write_path_csv(self.create(&name)?, &w, &xi)?;
            println!("wrote {}", self.path(&name).display());
        }
        Ok(true)
    }

    fn emit(&self, kind: &str, mut reports: Vec<VerificationReport>) -> Result<bool, CliError> {
        for (i, r) in reports.iter_mut().enumerate() {
            r.config = self.echo(r.config.clone());
            self.json(&format!("{kind}_{i}.json"), r)?;
            println!(
                "{} {}: lhs {:.6} rhs {:.6} diff {:+.3e} se {:.3e} allowance {:.2e}",
                if r.pass { "PASS" } else { "FAIL" },
                r.identity,
                r.lhs.mean,
                r.rhs.mean,
                r.difference,
                r.combined_se,
                r.allowance
            );
        }
        if self.formats.csv {
            write_csv(self.create(&format!("{kind}.csv"))?, &reports)?;
        }
        Ok(reports.iter().all(|r| r.pass))
    }

    fn nonempty<T>(cases: &[T], kind: &str) -> Result<(), CliError> {
        if cases.is_empty() {
            Err(CliError::Config(format!("no {kind} cases in experiment")))
        } else {
            Ok(())
        }
    }

    pub fn verify(&self, kind: VerifyKind) -> Result<bool, CliError> {
        let e = &self.config.experiment;
        let s = &self.setup;
        let reports = match kind {
            VerifyKind::Girsanov => {
                Self::nonempty(&e.girsanov, "girsanov")?;
                e.girsanov
                    .iter()
                    .map(|c| verify_girsanov(&c.f, &c.z, &c.h, s, c.target))
                    .collect::<Result<Vec<_>, _>>()?
            }
            VerifyKind::PathIbp => {
                Self::nonempty(&e.path_ibp, "path_ibp")?;
                e.path_ibp
                    .iter()
                    .map(|c| verify_path_ibp(&c.hs, &c.f, s, c.target))
                    .collect::<Result<Vec<_>, _>>()?
            }
            VerifyKind::GroupIbp | VerifyKind::LeftIbp => {
                let left = kind == VerifyKind::LeftIbp;
                let cases = if left { &e.left_ibp } else { &e.group_ibp };
                Self::nonempty(cases, if left { "left_ibp" } else { "group_ibp" })?;
                cases
                    .iter()
                    .map(|c| {
                        let id = if left {
                            Identity::LeftIbp {
                                hs: c.hs.clone(),
                                f: c.f.clone(),
                                fd_delta: c.fd_delta,
                            }
                        } else {
                            Identity::GroupIbp {
                                hs: c.hs.clone(),
                                f: c.f.clone(),
                                fd_delta: c.fd_delta,
                            }
                        };
                        verify_identity(&id, s, c.target)
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            VerifyKind::Inversion => {
                Self::nonempty(&e.inversion, "inversion")?;
                e.inversion
                    .iter()
                    .map(|c| verify_inversion(&c.f, s))
                    .collect::<Result<Vec<_>, _>>()?
            }
            VerifyKind::Moments => return self.moments(),
        };
        let name = match kind {
            VerifyKind::Girsanov => "girsanov",
            VerifyKind::PathIbp => "path_ibp",
            VerifyKind::GroupIbp => "group_ibp",
            VerifyKind::LeftIbp => "left_ibp",
            VerifyKind::Inversion => "inversion",
            VerifyKind::Moments => unreachable!(),
        };
        self.emit(name, reports)
    }

    fn moments(&self) -> Result<bool, CliError> {
        let case = self
            .config
            .experiment
            .moments
            .as_ref()
            .ok_or_else(|| CliError::Config("no moments section in experiment".into()))?;
        let mut r = moment_diagnostics(&case.targets, &case.p, &self.setup)?;
        r.config = self.echo(r.config.clone());
        self.json("moments.json", &r)?;
        if self.formats.csv {
            write_moment_csv(self.create("moments.csv")?, &r)?;
        }
        for row in &r.rows {
            println!(
                "{} {} p={}: N {:.6e} 2N {:.6e} ratio {:.4}",
                if row.pass { "PASS" } else { "FAIL" },
                row.target,
                row.p,
                row.estimate_n.mean,
                row.estimate_2n.mean,
                row.ratio
            );
        }
        Ok(r.pass)
    }

    pub fn convergence(&self) -> Result<bool, CliError> {
        let case = self
            .config
            .experiment
            .convergence
            .as_ref()
            .ok_or_else(|| CliError::Config("no convergence section in experiment".into()))?;
        if case.levels < 2 || case.identities.is_empty() {
            return Err(CliError::Config("convergence needs levels >= 2 and at least one identity".into()));
        }
        let factor = 1usize << (case.levels - 1);
        let fine = TimeGrid::new(self.setup.grid.horizon(), self.setup.grid.steps() * factor)?;
        let setup = self.setup.with_grid(fine);
        let mut reports = Vec::new();
        for (i, id) in case.identities.iter().enumerate() {
            let mut r = convergence(id, &setup, case.levels)?;
            r.config = self.echo(r.config.clone());
            self.json(&format!("convergence_{i}.json"), &r)?;
            println!("{} {} steps {:?}", if r.pass { "PASS" } else { "FAIL" }, r.identity, r.steps);
            for (n, g) in r.steps.iter().zip(&r.gaps) {
                println!("    n={n:<6} gap {:+.4e} se {:.3e}", g.mean, g.std_error);
            }
            println!("    monotone {} order {:.3} bias resolved {}", r.monotone, r.order, r.bias_resolved);
            reports.push(r);
        }
        if self.formats.csv {
            write_convergence_csv(self.create("convergence.csv")?, &reports)?;
        }
        Ok(reports.iter().all(|r| r.pass))
    }
}
