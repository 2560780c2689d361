#pragma once

// Loss of a scene against observations and its gradient with respect to
// every learnable parameter.
//
// The backward pass is assembled by hand: loss planes -> per-pixel Stokes
// (shading Jacobian from Dual numbers over the 11 G-buffer inputs) ->
// G-buffer sums -> alpha-blend adjoint -> per-surfel geometry (Dual numbers
// over position, tilt and log scale). Environment gradients flow through
// the recorded mip footprints and the irradiance sum, then through the mip
// filter transpose and the radiance activation. The GridMap is a constant.

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "polarsplat/dual.hpp"
#include "polarsplat/errors.hpp"
#include "polarsplat/gridmap.hpp"
#include "polarsplat/losses.hpp"
#include "polarsplat/params.hpp"
#include "polarsplat/polardr.hpp"

namespace polarsplat {

inline constexpr std::size_t kShadeInputs = 11;  // albedo 3, normal 3, position 3, roughness, ior
using ShadeDual = Dual<kShadeInputs>;
inline constexpr std::size_t kGeomParams = 7;  // position 3, tilt 2, log scale 2
using GeomDual = Dual<kGeomParams>;

/// Loss planes of a plain render.
inline RenderOutputs renderOutputs(const PolarRender& r, const Camera& cam) {
    RenderOutputs o;
    const int w = r.gbuffer.width, h = r.gbuffer.height;
    o.s0 = Image<Rgb>(w, h);
    o.s1 = Image<Rgb>(w, h);
    o.s2 = Image<Rgb>(w, h);
    o.opacity = Image<double>(w, h);
    o.normal = Image<Vec3d>(w, h);
    for (std::size_t i = 0; i < r.gbuffer.size(); ++i) {
        o.s0.pixels[i] = r.total.pixels[i].s0;
        o.s1.pixels[i] = r.total.pixels[i].s1;
        o.s2.pixels[i] = r.total.pixels[i].s2;
        o.opacity.pixels[i] = r.gbuffer.opacity[i];
        o.normal.pixels[i] = r.gbuffer.normal[i];
    }
    o.depthNormal = depthToNormal(r.gbuffer, cam);
    return o;
}

namespace detail {

template <typename T>
Vec3<T> rotate(const Mat3d& m, const Vec3<T>& v) {
    return {v.x * m(0, 0) + v.y * m(0, 1) + v.z * m(0, 2), v.x * m(1, 0) + v.y * m(1, 1) + v.z * m(1, 2),
            v.x * m(2, 0) + v.y * m(2, 1) + v.z * m(2, 2)};
}

/// Surfel geometry as Duals over (position, tilt at zero, log scale).
struct GeometryDual {
    Vec3<GeomDual> tangentU, tangentV, normal;
    Vec3<GeomDual> position;
    GeomDual scaleU, scaleV;
};

inline GeometryDual geometryDual(const SurfelGaussian& g) {
    GeometryDual s;
    s.position = {GeomDual::variable(g.position.x, 0), GeomDual::variable(g.position.y, 1),
                  GeomDual::variable(g.position.z, 2)};
    const Vec3<GeomDual> w =
        Vec3<GeomDual>(g.tangentU) * GeomDual::variable(0.0, 3) + Vec3<GeomDual>(g.tangentV) * GeomDual::variable(0.0, 4);
    const Mat3<GeomDual> r = rotationFromAxisAngle(w);
    s.tangentU = r * Vec3<GeomDual>(g.tangentU);
    s.tangentV = r * Vec3<GeomDual>(g.tangentV);
    s.normal = cross(s.tangentU, s.tangentV);
    s.scaleU = exp(GeomDual::variable(std::log(g.scaleU), 5));
    s.scaleV = exp(GeomDual::variable(std::log(g.scaleV), 6));
    return s;
}

inline SplatFrame<GeomDual> splatFrameDual(const Camera& cam, const GeometryDual& s) {
    return {rotate(cam.rotation, s.position) + Vec3<GeomDual>(cam.translation),
            rotate(cam.rotation, s.tangentU * s.scaleU), rotate(cam.rotation, s.tangentV * s.scaleV)};
}

inline PixelInputs<ShadeDual> dualInputs(const PixelInputs<double>& in) {
    PixelInputs<ShadeDual> d;
    d.albedo = {ShadeDual::variable(in.albedo.x, 0), ShadeDual::variable(in.albedo.y, 1),
                ShadeDual::variable(in.albedo.z, 2)};
    d.normal = {ShadeDual::variable(in.normal.x, 3), ShadeDual::variable(in.normal.y, 4),
                ShadeDual::variable(in.normal.z, 5)};
    d.position = {ShadeDual::variable(in.position.x, 6), ShadeDual::variable(in.position.y, 7),
                  ShadeDual::variable(in.position.z, 8)};
    d.roughness = ShadeDual::variable(in.roughness, 9);
    d.ior = ShadeDual::variable(in.ior, 10);
    return d;
}

inline bool finite(const Vec3d& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// Names the first pixel of a view whose render is not finite.
inline std::string describeNonFinite(const RenderOutputs& o, std::size_t view, const LossBreakdown& b) {
    std::ostringstream msg;
    msg << "non-finite loss in view " << view;
    for (std::size_t i = 0; i < o.s0.size(); ++i) {
        if (finite(o.s0.pixels[i]) && finite(o.s1.pixels[i]) && finite(o.s2.pixels[i]) &&
            std::isfinite(o.opacity.pixels[i]) && finite(o.normal.pixels[i]) && finite(o.depthNormal.pixels[i]))
            continue;
        msg << " at pixel (" << i % static_cast<std::size_t>(o.s0.width) << ", "
            << i / static_cast<std::size_t>(o.s0.width) << ")";
        return msg.str();
    }
    msg << " (rgb " << b.rgb << ", pol " << b.pol << ", lp " << b.lp << ", mask " << b.mask << ", depth " << b.depth
        << ", smooth " << b.smooth << ")";
    return msg.str();
}

inline void checkGradientFinite(const SceneGradient& g) {
    for (std::size_t s = 0; s < g.surfels.size(); ++s)
        for (std::size_t k = 0; k < kSurfelParams; ++k)
            if (!std::isfinite(g.surfels[s][k]))
                throw NumericError("non-finite gradient for surfel " + std::to_string(s) + " parameter " +
                                   surfelParamName(k));
    for (std::size_t t = 0; t < g.env.size(); ++t)
        if (!finite(g.env[t])) throw NumericError("non-finite gradient for environment texel " + std::to_string(t));
    for (std::size_t a = 0; a < g.lpAngles.size(); ++a)
        if (!std::isfinite(g.lpAngles[a])) throw NumericError("non-finite gradient for LP angle " + std::to_string(a));
}

/// Per-view backward pass. Adds latent gradients of the surfels to `grad`
/// and environment level gradients to `levelGrad`.
inline void backwardView(const std::vector<SurfelGaussian>& scene, const Camera& cam, const EnvCubeMipmap& env,
                         const GBuffer& gb, const RasterTrace& trace, const std::vector<std::array<ShadeDual, 9>>& stokes,
                         const std::vector<ShadeRecord>& records, const std::vector<unsigned char>& shaded,
                         const RenderOutputs& out, const RenderAdjoint& adj, SceneGradient& grad,
                         std::vector<std::vector<Rgb>>& levelGrad) {
    const std::size_t n = gb.size();
    std::vector<Rgb> gAlb(n), gPos(n), gNrm(n);
    std::vector<double> gRough(n, 0.0), gIor(n, 0.0), gDepth(n, 0.0), gOpa(n, 0.0);

    // Shading adjoint per shaded pixel.
    for (std::size_t i = 0; i < n; ++i) {
        gOpa[i] += adj.opacity.pixels[i];
        gNrm[i] += adj.normal.pixels[i];
        if (!shaded[i]) continue;
        const Rgb g0 = adj.s0.pixels[i], g1 = adj.s1.pixels[i], g2 = adj.s2.pixels[i];
        std::array<double, kShadeInputs> gin{};
        for (std::size_t c = 0; c < 3; ++c) {
            const ShadeDual& a = stokes[i][c];
            const ShadeDual& b = stokes[i][3 + c];
            const ShadeDual& d = stokes[i][6 + c];
            for (std::size_t k = 0; k < kShadeInputs; ++k) gin[k] += g0[c] * a.d[k] + g1[c] * b.d[k] + g2[c] * d.d[k];
        }
        const ShadeRecord& rec = records[i];
        if (rec.specularFromEnv) {
            const Rgb e = (g0 + g1 * (rec.betaS * rec.cos2Phi) - g2 * (rec.betaS * rec.sin2Phi)) * rec.specularScale;
            for (int k = 0; k < rec.footprint.count; ++k) {
                const auto& en = rec.footprint.entries[static_cast<std::size_t>(k)];
                levelGrad[static_cast<std::size_t>(en.level)][en.texel] += e * en.weight;
            }
        }
        if (rec.diffuseFromEnv) {
            const Rgb d = hadamard(g0 + g1 * (rec.betaD * rec.cos2Phi) - g2 * (rec.betaD * rec.sin2Phi), rec.diffuseScale);
            accumulateIrradianceAdjoint(env.layout(0), rec.normal, d, levelGrad[0]);
        }
        const double o = gb.opacity[i];
        const double o2 = o * o;
        const Rgb ga{gin[0], gin[1], gin[2]};
        const Vec3d gp{gin[6], gin[7], gin[8]};
        gAlb[i] += ga / o;
        gPos[i] += gp / o;
        gRough[i] += gin[9] / o;
        gIor[i] += gin[10] / o;
        gOpa[i] -= (dot(ga, gb.albedo[i]) + dot(gp, gb.position[i]) + gin[9] * gb.roughness[i] + gin[10] * gb.ior[i]) / o2;
        gNrm[i] += Vec3d{gin[3], gin[4], gin[5]};
    }

    // Depth normals depend on the mean depths of the four neighbours.
    for (int y = 1; y + 1 < gb.height; ++y)
        for (int x = 1; x + 1 < gb.width; ++x) {
            const std::size_t c = gb.index(x, y);
            const Vec3d g = adj.depthNormal.pixels[c];
            if (isZero(g) || isZero(out.depthNormal.pixels[c])) continue;
            const std::array<std::size_t, 4> nb{gb.index(x - 1, y), gb.index(x + 1, y), gb.index(x, y - 1),
                                                gb.index(x, y + 1)};
            std::array<Dual<4>, 4> d;
            for (std::size_t k = 0; k < 4; ++k) d[k] = Dual<4>::variable(gb.meanDepth(nb[k]), k);
            const Vec3<Dual<4>> nd = depthNormalFromNeighbors<Dual<4>>(cam, x, y, d);
            for (std::size_t k = 0; k < 4; ++k) {
                const double gd = g.x * nd.x.d[k] + g.y * nd.y.d[k] + g.z * nd.z.d[k];
                const double o = gb.opacity[nb[k]];
                gDepth[nb[k]] += gd / o;
                gOpa[nb[k]] -= gd * gb.depth[nb[k]] / (o * o);
            }
        }

    // Renormalized normal -> raw normal sum.
    std::vector<Vec3d> gNSum(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (isZero(gb.normal[i]) || isZero(gNrm[i])) continue;
        const Vec3d nn = gb.normal[i];
        gNSum[i] = (gNrm[i] - nn * dot(nn, gNrm[i])) / length(gb.normalSum[i]);
    }

    // Alpha-blend adjoint.
    std::vector<std::optional<GeometryDual>> geom(scene.size());
    std::vector<std::optional<SplatFrame<GeomDual>>> frames(scene.size());
    std::vector<std::array<double, kGeomParams>> gGeom(scene.size());
    std::vector<Vec3d> gSurfNormal(scene.size());
    std::vector<Rgb> gSurfAlbedo(scene.size());
    std::vector<double> gSurfOpacity(scene.size(), 0.0), gSurfRough(scene.size(), 0.0), gSurfIor(scene.size(), 0.0);
    const Mat3d camToWorld = cam.rotation.transposed();
    const Vec3d origin = cam.center();
    std::vector<double> wk, tk, ck;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& list = trace[i];
        if (list.empty()) continue;
        if (isZero(gAlb[i]) && isZero(gPos[i]) && isZero(gNSum[i]) && gRough[i] == 0.0 && gIor[i] == 0.0 &&
            gDepth[i] == 0.0 && gOpa[i] == 0.0)
            continue;
        const int x = static_cast<int>(i % static_cast<std::size_t>(gb.width));
        const int y = static_cast<int>(i / static_cast<std::size_t>(gb.width));
        const Vec3d dirCam = cam.pixelRay(x, y);
        const Vec3d ray = camToWorld * dirCam;
        wk.clear();
        tk.clear();
        ck.clear();
        blendPixel(list, [&](std::size_t k, double w, double t) {
            const Contribution& c = list[k];
            const SurfelGaussian& g = scene[static_cast<std::size_t>(c.surfel)];
            wk.push_back(w);
            tk.push_back(t);
            ck.push_back(dot(gAlb[i], g.albedo) + dot(gNSum[i], g.normal()) + gRough[i] * g.roughness +
                         gIor[i] * g.ior() + gDepth[i] * c.z + dot(gPos[i], origin + ray * c.z) + gOpa[i]);
        });
        double suffix = 0.0;  // sum over later visited contributions of w c
        for (std::size_t k = wk.size(); k-- > 0;) {
            const Contribution& c = list[k];
            const auto s = static_cast<std::size_t>(c.surfel);
            const double gAlpha = tk[k] * ck[k] - suffix / (1.0 - c.alpha);
            suffix += wk[k] * ck[k];
            gSurfAlbedo[s] += gAlb[i] * wk[k];
            gSurfNormal[s] += gNSum[i] * wk[k];
            gSurfRough[s] += gRough[i] * wk[k];
            gSurfIor[s] += gIor[i] * wk[k];
            const double gz = wk[k] * (gDepth[i] + dot(gPos[i], ray));
            if (!geom[s]) {
                geom[s] = geometryDual(scene[s]);
                frames[s] = splatFrameDual(cam, *geom[s]);
            }
            const auto hit = intersectSplat(*frames[s], dirCam);
            if (!hit) continue;
            const GeomDual gw = gaussianWeight(hit->u, hit->v);
            const double op = scene[s].opacity;
            for (std::size_t q = 0; q < kGeomParams; ++q) gGeom[s][q] += gAlpha * op * gw.d[q] + gz * hit->z.d[q];
            gSurfOpacity[s] += gAlpha * gw.v;
        }
    }

    // Per-surfel chain to the latents.
    for (std::size_t s = 0; s < scene.size(); ++s) {
        const SurfelGaussian& g = scene[s];
        SurfelVector& out = grad.surfels[s];
        if (!isZero(gSurfNormal[s])) {
            if (!geom[s]) geom[s] = geometryDual(g);
            const Vec3<GeomDual>& nd = geom[s]->normal;
            for (std::size_t q = 0; q < kGeomParams; ++q)
                gGeom[s][q] += gSurfNormal[s].x * nd.x.d[q] + gSurfNormal[s].y * nd.y.d[q] + gSurfNormal[s].z * nd.z.d[q];
        }
        for (std::size_t q = 0; q < kGeomParams; ++q) out[q] += gGeom[s][q];
        out[kOpacityLogit] += gSurfOpacity[s] * g.opacity * (1.0 - g.opacity);
        out[kAlbedoR] += gSurfAlbedo[s].x * g.albedo.x * (1.0 - g.albedo.x);
        out[kAlbedoG] += gSurfAlbedo[s].y * g.albedo.y * (1.0 - g.albedo.y);
        out[kAlbedoB] += gSurfAlbedo[s].z * g.albedo.z * (1.0 - g.albedo.z);
        const double sr = (g.roughness - kRoughnessMin) / (1.0 - kRoughnessMin);
        out[kRoughnessLatent] += gSurfRough[s] * (1.0 - kRoughnessMin) * sr * (1.0 - sr);
        out[kIorLatent] += gSurfIor[s] * sigmoidDerivative(g.iorLatent);
    }
}

}  // namespace detail

/// Forward render of one view in the form the backward pass needs.
struct ViewState {
    GBuffer gbuffer;
    RasterTrace trace;
    std::vector<std::array<ShadeDual, 9>> stokes;  // total s0 rgb, s1 rgb, s2 rgb
    std::vector<ShadeRecord> records;
    std::vector<unsigned char> shaded;
    RenderOutputs outputs;
};

inline ViewState renderViewWithJacobians(const std::vector<SurfelGaussian>& scene, const Camera& cam,
                                         const Lighting& light) {
    ViewState v;
    v.gbuffer = rasterize(scene, cam, &v.trace);
    const GBuffer& gb = v.gbuffer;
    const std::size_t n = gb.size();
    v.stokes.resize(n);
    v.records.resize(n);
    v.shaded.assign(n, 0);
    PolarRender plain;
    plain.total = StokesImage(gb.width, gb.height, StokesComponent::Total);
    parallelFor(n, [&](std::size_t i) {
        if (!isShadedPixel(gb, i)) return;
        PixelStokes<ShadeDual> s;
        if (!shadePixel(detail::dualInputs(pixelInputs(gb, i)), cam, light, s, &v.records[i])) return;
        v.shaded[i] = 1;
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t c = 0; c < 3; ++c) v.stokes[i][p * 3 + c] = s.diffuse[p][c] + s.specular[p][c];
        // Values come from the plain shading path so that they match the
        // forward render bit for bit; the duals only supply derivatives.
        PixelStokes<double> d;
        shadePixel(pixelInputs(gb, i), cam, light, d, nullptr);
        plain.total.pixels[i] = toStokes(d.diffuse) + toStokes(d.specular);
    });
    plain.gbuffer = gb;
    v.outputs = renderOutputs(plain, cam);
    return v;
}

/// Mean loss over `observations`; with `grad`, also its gradient with respect
/// to the surfel latents (tilts must be zero), the environment latents of
/// `env` and the LP angles in `setup`.
inline LossBreakdown sceneLoss(const std::vector<SurfelGaussian>& scene, const std::vector<Observation>& observations,
                               const EnvCubeMipmap& env, const SplitSumLUT& lut, const AnchorGrid* grid,
                               const LossSetup& setup, SceneGradient* grad = nullptr) {
    if (observations.empty()) throw std::invalid_argument("sceneLoss needs observations");
    if (grid && !grid->built()) throw ConfigError("anchor grid not built");
    std::optional<SurfelTracer> tracer;
    Lighting light{&env, &lut, nullptr, nullptr};
    if (grid) {
        tracer.emplace(scene);
        light.grid = grid;
        light.tracer = &*tracer;
    }
    const double weight = 1.0 / static_cast<double>(observations.size());
    std::vector<std::vector<Rgb>> levelGrad;
    if (grad) {
        grad->surfels.assign(scene.size(), SurfelVector{});
        grad->env.assign(env.hasLatents() ? env.latents.size() : 0, Rgb{});
        grad->lpAngles.assign(setup.lpAngles.size(), 0.0);
        levelGrad.resize(env.levels.size());
        for (std::size_t l = 0; l < env.levels.size(); ++l) levelGrad[l].assign(env.levels[l].size(), Rgb{});
    }
    LossBreakdown total;
    for (std::size_t v = 0; v < observations.size(); ++v) {
        const Observation& obs = observations[v];
        LossBreakdown b;
        if (!grad) {
            const RenderOutputs out = renderOutputs(shadeGBuffer(rasterize(scene, obs.camera), obs.camera, light), obs.camera);
            b = totalLoss(obs, out, setup);
            if (!std::isfinite(b.total)) throw NumericError(detail::describeNonFinite(out, v, b));
        } else {
            const ViewState st = renderViewWithJacobians(scene, obs.camera, light);
            RenderAdjoint adj(st.gbuffer.width, st.gbuffer.height, setup.lpAngles.size());
            b = totalLoss(obs, st.outputs, setup, &adj, weight);
            if (!std::isfinite(b.total)) throw NumericError(detail::describeNonFinite(st.outputs, v, b));
            detail::backwardView(scene, obs.camera, env, st.gbuffer, st.trace, st.stokes, st.records, st.shaded,
                                 st.outputs, adj, *grad, levelGrad);
            for (std::size_t a = 0; a < adj.lpAngles.size(); ++a) grad->lpAngles[a] += adj.lpAngles[a];
        }
        total += b.scaled(weight);
    }
    if (grad && env.hasLatents()) {
        std::vector<Rgb> baseGrad;
        env.filter->backward(levelGrad, baseGrad);
        for (std::size_t t = 0; t < baseGrad.size(); ++t) {
            const Rgb& l = env.latents[t];
            grad->env[t] = {baseGrad[t].x * envActivationDerivative(l.x), baseGrad[t].y * envActivationDerivative(l.y),
                            baseGrad[t].z * envActivationDerivative(l.z)};
        }
    }
    if (grad) detail::checkGradientFinite(*grad);
    return total;
}

}  // namespace polarsplat
