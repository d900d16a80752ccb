import { describe, expect, it } from "vitest";

import { parseCsv } from "../src/csv";
import { rateVsNData, dofContourData } from "../src/figure";

const RATE_CSV = [
  "experiment,n,p,p_rule,cells,users,alpha,rho_db,rho_tau,trials,seed," +
    "mc_rate_mf,se_mf,de_rate_mf,mc_rate_mmse,se_mmse,de_rate_mmse," +
    "cf_rate_mf,cf_rate_mmse,status,version",
  "rate-vs-n,20,20,N,4,10,0.1,0,inf,500,1,1.09,0.01,1.05,1.41,0.008,1.40,1.05,1.40,ok,0.1.0",
  "rate-vs-n,40,40,N,4,10,0.1,0,inf,500,1,1.68,0.009,1.61,2.21,0.007,2.20,1.61,2.20,ok,0.1.0",
  "rate-vs-n,20,7,N/3,4,10,0.1,0,inf,500,1,0.51,0.005,0.48,0.71,0.004,0.70,0.48,0.70,ok,0.1.0",
  "rate-vs-n,40,13,N/3,4,10,0.1,0,inf,500,1,0.83,0.005,0.79,1.06,0.004,1.05,0.79,1.05,ok,0.1.0",
].join("\n");

const DOF_CSV = [
  "experiment,rho_n_db,eta,alpha,cells,lam,r_inf,dof_mf,status_mf," +
    "dof_mmse,status_mmse,seed,version",
  "dof-contour,0,0.9,0.3,4,1,2.2338,,infeasible,,infeasible,1,0.1.0",
  "dof-contour,10,0.9,0.3,4,0.1,2.2338,184.4,ok,130.2,ok,1,0.1.0",
  "dof-contour,20,0.9,0.3,4,0.01,2.2338,87.7,ok,58.9,ok,1,0.1.0",
  "dof-contour,10,0.5,0.3,4,0.1,2.2338,7.3,ok,6.4,ok,1,0.1.0",
  "dof-contour,20,0.5,0.3,4,0.01,2.2338,6.4,ok,5.7,ok,1,0.1.0",
  "dof-contour,0,0.5,0.3,4,1,2.2338,31.5,ok,16.8,ok,1,0.1.0",
].join("\n");

describe("rateVsNData", () => {
  const data = rateVsNData(parseCsv(RATE_CSV));

  it("builds four series per DoF rule", () => {
    expect(data.series).toHaveLength(8);
    const labels = data.series.map((s) => s.label);
    expect(labels).toContain("MF approx, P=N");
    expect(labels).toContain("MMSE approx, P=N/3");
  });

  it("dashes exactly the regularized-detector lines", () => {
    for (const s of data.series) {
      if (s.markers) continue;
      if (s.label.startsWith("MMSE")) {
        expect(s.dash).not.toBe("");
      } else {
        expect(s.dash).toBe("");
      }
    }
  });

  it("attaches two-standard-error bars to simulation points", () => {
    const sim = data.series.find((s) => s.label === "MF sim, P=N")!;
    expect(sim.markers).toBe(true);
    expect(sim.points[0].bar).toBeCloseTo(0.02, 12);
    expect(sim.points.map((p) => p.x)).toEqual([20, 40]);
  });

  it("names a missing column", () => {
    const broken = parseCsv(RATE_CSV.replace("se_mf", "sigma"));
    expect(() => rateVsNData(broken)).toThrow(/"se_mf"/);
  });
});

describe("dofContourData", () => {
  const data = dofContourData(parseCsv(DOF_CSV), false);

  it("builds a solid/dashed pair per target fraction", () => {
    expect(data.series).toHaveLength(4);
    expect(data.series.map((s) => s.label)).toEqual([
      "MF, eta=0.5", "MMSE, eta=0.5", "MF, eta=0.9", "MMSE, eta=0.9",
    ]);
    expect(data.series[0].dash).toBe("");
    expect(data.series[1].dash).not.toBe("");
  });

  it("keeps infeasible points as gaps", () => {
    const mf09 = data.series.find((s) => s.label === "MF, eta=0.9")!;
    expect(mf09.points.map((p) => p.y)).toEqual([null, 184.4, 87.7]);
  });

  it("sorts by effective SNR", () => {
    const mf05 = data.series.find((s) => s.label === "MF, eta=0.5")!;
    expect(mf05.points.map((p) => p.x)).toEqual([0, 10, 20]);
  });

  it("names a missing column", () => {
    const broken = parseCsv(DOF_CSV.replace("dof_mmse", "dof_other"));
    expect(() => dofContourData(broken, false)).toThrow(/"dof_mmse"/);
  });
});
