"""Near-earth SGP4 mean-element propagation, vectorized over time.

Implements the secular, drag (bstar) and short-period terms of the
near-earth SGP4 model with WGS72 constants, as required for TLE mean
elements. Deep-space (SDP4) resonance and lunisolar terms are not
implemented; such records are rejected at initialization.

Positions are returned in the TEME frame in km, velocities in km/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DeepSpaceUnsupported
from .tle import TleRecord

TWOPI = 2.0 * math.pi
DEG = math.pi / 180.0


@dataclass(frozen=True)
class GravityModel:
    mu: float            # km^3/s^2
    radius_km: float
    j2: float
    j3: float
    j4: float

    @property
    def xke(self) -> float:
        return 60.0 / math.sqrt(self.radius_km ** 3 / self.mu)

    @property
    def j3oj2(self) -> float:
        return self.j3 / self.j2


WGS72 = GravityModel(mu=398600.8, radius_km=6378.135, j2=0.001082616,
                     j3=-0.00000253881, j4=-0.00000165597)

# per-sample status codes
OK = 0
ECCENTRICITY_OUT_OF_RANGE = 1
MEAN_MOTION_NONPOSITIVE = 2
SEMILATUS_NEGATIVE = 4
DECAYED = 6


class NearEarthSgp4:
    """Initialized SGP4 state for one TLE record.

    >>> sat = NearEarthSgp4(record)           # doctest: +SKIP
    >>> r, v, status = sat.propagate(np.arange(0, 1440, 1.0))   # minutes since epoch
    """

    def __init__(self, record: TleRecord, gravity: GravityModel = WGS72):
        self.record = record
        self.gravity = gravity
        self._init(
            no_kozai=record.mean_motion * TWOPI / 1440.0,
            ecco=record.eccentricity,
            inclo=record.inclination * DEG,
            nodeo=record.raan * DEG,
            argpo=record.arg_perigee * DEG,
            mo=record.mean_anomaly * DEG,
            bstar=record.bstar,
        )

    def _init(self, no_kozai, ecco, inclo, nodeo, argpo, mo, bstar):
        g = self.gravity
        xke, j2, j4, j3oj2, re = g.xke, g.j2, g.j4, g.j3oj2, g.radius_km
        x2o3 = 2.0 / 3.0

        # recover the original mean motion and semi-major axis (Brouwer) from Kozai elements
        eccsq = ecco * ecco
        omeosq = 1.0 - eccsq
        rteosq = math.sqrt(omeosq)
        cosio = math.cos(inclo)
        cosio2 = cosio * cosio
        ak = (xke / no_kozai) ** x2o3
        d1 = 0.75 * j2 * (3.0 * cosio2 - 1.0) / (rteosq * omeosq)
        delta = d1 / (ak * ak)
        adel = ak * (1.0 - delta * delta - delta * (1.0 / 3.0 + 134.0 * delta * delta / 81.0))
        delta = d1 / (adel * adel)
        no = no_kozai / (1.0 + delta)
        ao = (xke / no) ** x2o3
        sinio = math.sin(inclo)
        po = ao * omeosq
        con42 = 1.0 - 5.0 * cosio2
        con41 = -con42 - cosio2 - cosio2
        posq = po * po
        rp = ao * (1.0 - ecco)

        if TWOPI / no >= 225.0:
            raise DeepSpaceUnsupported(
                f"record {self.record.norad_id}: un-Kozai period {TWOPI / no:.1f} min is deep space"
            )

        ss = 78.0 / re + 1.0
        qzms2t = ((120.0 - 78.0) / re) ** 4
        isimp = rp < (220.0 / re + 1.0)
        sfour = ss
        qzms24 = qzms2t
        perige = (rp - 1.0) * re
        if perige < 156.0:
            sfour = perige - 78.0
            if perige < 98.0:
                sfour = 20.0
            qzms24 = ((120.0 - sfour) / re) ** 4
            sfour = sfour / re + 1.0
        pinvsq = 1.0 / posq

        tsi = 1.0 / (ao - sfour)
        eta = ao * ecco * tsi
        etasq = eta * eta
        eeta = ecco * eta
        psisq = abs(1.0 - etasq)
        coef = qzms24 * tsi ** 4
        coef1 = coef / psisq ** 3.5
        cc2 = coef1 * no * (ao * (1.0 + 1.5 * etasq + eeta * (4.0 + etasq))
                            + 0.375 * j2 * tsi / psisq * con41 * (8.0 + 3.0 * etasq * (8.0 + etasq)))
        cc1 = bstar * cc2
        cc3 = 0.0
        if ecco > 1.0e-4:
            cc3 = -2.0 * coef * tsi * j3oj2 * no * sinio / ecco
        x1mth2 = 1.0 - cosio2
        cc4 = 2.0 * no * coef1 * ao * omeosq * (
            eta * (2.0 + 0.5 * etasq) + ecco * (0.5 + 2.0 * etasq)
            - j2 * tsi / (ao * psisq) * (
                -3.0 * con41 * (1.0 - 2.0 * eeta + etasq * (1.5 - 0.5 * eeta))
                + 0.75 * x1mth2 * (2.0 * etasq - eeta * (1.0 + etasq)) * math.cos(2.0 * argpo)
            )
        )
        cc5 = 2.0 * coef1 * ao * omeosq * (1.0 + 2.75 * (etasq + eeta) + eeta * etasq)

        cosio4 = cosio2 * cosio2
        temp1 = 1.5 * j2 * pinvsq * no
        temp2 = 0.5 * temp1 * j2 * pinvsq
        temp3 = -0.46875 * j4 * pinvsq * pinvsq * no
        mdot = (no + 0.5 * temp1 * rteosq * con41
                + 0.0625 * temp2 * rteosq * (13.0 - 78.0 * cosio2 + 137.0 * cosio4))
        argpdot = (-0.5 * temp1 * con42 + 0.0625 * temp2 * (7.0 - 114.0 * cosio2 + 395.0 * cosio4)
                   + temp3 * (3.0 - 36.0 * cosio2 + 49.0 * cosio4))
        xhdot1 = -temp1 * cosio
        nodedot = xhdot1 + (0.5 * temp2 * (4.0 - 19.0 * cosio2) + 2.0 * temp3 * (3.0 - 7.0 * cosio2)) * cosio

        omgcof = bstar * cc3 * math.cos(argpo)
        xmcof = 0.0
        if ecco > 1.0e-4:
            xmcof = -x2o3 * coef * bstar / eeta
        nodecf = 3.5 * omeosq * xhdot1 * cc1
        t2cof = 1.5 * cc1
        denom = 1.0 + cosio
        if abs(denom) <= 1.5e-12:
            denom = 1.5e-12
        xlcof = -0.25 * j3oj2 * sinio * (3.0 + 5.0 * cosio) / denom
        aycof = -0.5 * j3oj2 * sinio
        delmo = (1.0 + eta * math.cos(mo)) ** 3
        sinmao = math.sin(mo)
        x7thm1 = 7.0 * cosio2 - 1.0

        d2 = d3 = d4 = t3cof = t4cof = t5cof = 0.0
        if not isimp:
            cc1sq = cc1 * cc1
            d2 = 4.0 * ao * tsi * cc1sq
            temp = d2 * tsi * cc1 / 3.0
            d3 = (17.0 * ao + sfour) * temp
            d4 = 0.5 * temp * ao * tsi * (221.0 * ao + 31.0 * sfour) * cc1
            t3cof = d2 + 2.0 * cc1sq
            t4cof = 0.25 * (3.0 * d3 + cc1 * (12.0 * d2 + 10.0 * cc1sq))
            t5cof = 0.2 * (3.0 * d4 + 12.0 * cc1 * d3 + 6.0 * d2 * d2 + 15.0 * cc1sq * (2.0 * d2 + cc1sq))

        self.__dict__.update(
            no=no, ecco=ecco, inclo=inclo, nodeo=nodeo, argpo=argpo, mo=mo, bstar=bstar,
            isimp=isimp, eta=eta, cc1=cc1, cc4=cc4, cc5=cc5, mdot=mdot, argpdot=argpdot,
            nodedot=nodedot, omgcof=omgcof, xmcof=xmcof, nodecf=nodecf, t2cof=t2cof,
            xlcof=xlcof, aycof=aycof, delmo=delmo, sinmao=sinmao, x7thm1=x7thm1,
            con41=con41, x1mth2=x1mth2, d2=d2, d3=d3, d4=d4,
            t3cof=t3cof, t4cof=t4cof, t5cof=t5cof,
        )

    def propagate(self, tsince_min):
        """Propagate to ``tsince_min`` minutes past epoch (scalar or array).

        Returns ``(r, v, status)`` with ``r``/``v`` of shape ``(..., 3)`` and an
        integer status array (0 = ok; see module constants). Samples with a
        non-zero status carry NaN state vectors.
        """
        t = np.asarray(tsince_min, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        g = self.gravity
        xke, j2 = g.xke, g.j2
        status = np.zeros(t.shape, dtype=np.int8)

        # secular gravity and atmospheric drag
        xmdf = self.mo + self.mdot * t
        argpdf = self.argpo + self.argpdot * t
        nodedf = self.nodeo + self.nodedot * t
        argpm = argpdf
        mm = xmdf
        t2 = t * t
        nodem = nodedf + self.nodecf * t2
        tempa = 1.0 - self.cc1 * t
        tempe = self.bstar * self.cc4 * t
        templ = self.t2cof * t2
        if not self.isimp:
            delomg = self.omgcof * t
            delm = self.xmcof * ((1.0 + self.eta * np.cos(xmdf)) ** 3 - self.delmo)
            temp = delomg + delm
            mm = xmdf + temp
            argpm = argpdf - temp
            t3 = t2 * t
            t4 = t3 * t
            tempa = tempa - self.d2 * t2 - self.d3 * t3 - self.d4 * t4
            tempe = tempe + self.bstar * self.cc5 * (np.sin(mm) - self.sinmao)
            templ = templ + self.t3cof * t3 + t4 * (self.t4cof + t * self.t5cof)

        nm = np.full(t.shape, self.no)
        em = np.full(t.shape, self.ecco)
        inclm = self.inclo
        with np.errstate(invalid="ignore", divide="ignore"):
            am = (xke / nm) ** (2.0 / 3.0) * tempa * tempa
            nm = xke / am ** 1.5
            em = em - tempe
        status[(em >= 1.0) | (em < -0.001)] = ECCENTRICITY_OUT_OF_RANGE
        status[(status == OK) & ~(nm > 0.0)] = MEAN_MOTION_NONPOSITIVE
        em = np.where(em < 1.0e-6, 1.0e-6, em)
        mm = mm + self.no * templ
        xlm = mm + argpm + nodem

        nodem = np.fmod(nodem, TWOPI)
        argpm = np.fmod(argpm, TWOPI)
        xlm = np.fmod(xlm, TWOPI)
        mm = np.fmod(xlm - argpm - nodem, TWOPI)

        sinip = math.sin(inclm)
        cosip = math.cos(inclm)

        # long-period periodics
        axnl = em * np.cos(argpm)
        with np.errstate(invalid="ignore", divide="ignore"):
            temp = 1.0 / (am * (1.0 - em * em))
        aynl = em * np.sin(argpm) + temp * self.aycof
        xl = mm + argpm + nodem + temp * self.xlcof * axnl

        # Kepler's equation in the equinoctial-like variables
        u = np.fmod(xl - nodem, TWOPI)
        eo1 = u.copy()
        active = np.ones(t.shape, dtype=bool)
        sineo1 = np.sin(eo1)
        coseo1 = np.cos(eo1)
        for _ in range(10):
            if not active.any():
                break
            s = np.sin(eo1[active])
            c = np.cos(eo1[active])
            sineo1[active] = s
            coseo1[active] = c
            ax = axnl[active]
            ay = aynl[active]
            step = (u[active] - ay * c + ax * s - eo1[active]) / (1.0 - c * ax - s * ay)
            step = np.clip(step, -0.95, 0.95)
            eo1[active] = eo1[active] + step
            still = np.abs(step) >= 1.0e-12
            idx = np.flatnonzero(active)
            active[idx[~still]] = False

        # short-period preliminary quantities
        ecose = axnl * coseo1 + aynl * sineo1
        esine = axnl * sineo1 - aynl * coseo1
        el2 = axnl * axnl + aynl * aynl
        pl = am * (1.0 - el2)
        status[(status == OK) & ~(pl >= 0.0)] = SEMILATUS_NEGATIVE
        with np.errstate(invalid="ignore", divide="ignore"):
            rl = am * (1.0 - ecose)
            rdotl = np.sqrt(am) * esine / rl
            rvdotl = np.sqrt(pl) / rl
            betal = np.sqrt(1.0 - el2)
            temp = esine / (1.0 + betal)
            sinu = am / rl * (sineo1 - aynl - axnl * temp)
            cosu = am / rl * (coseo1 - axnl + aynl * temp)
            su = np.arctan2(sinu, cosu)
            sin2u = (cosu + cosu) * sinu
            cos2u = 1.0 - 2.0 * sinu * sinu
            temp = 1.0 / pl
            temp1 = 0.5 * j2 * temp
            temp2 = temp1 * temp

            # short-period periodics
            mrt = rl * (1.0 - 1.5 * temp2 * betal * self.con41) + 0.5 * temp1 * self.x1mth2 * cos2u
            su = su - 0.25 * temp2 * self.x7thm1 * sin2u
            xnode = nodem + 1.5 * temp2 * cosip * sin2u
            xinc = inclm + 1.5 * temp2 * cosip * sinip * cos2u
            mvt = rdotl - nm * temp1 * self.x1mth2 * sin2u / xke
            rvdot = rvdotl + nm * temp1 * (self.x1mth2 * cos2u + 1.5 * self.con41) / xke

        sinsu, cossu = np.sin(su), np.cos(su)
        snod, cnod = np.sin(xnode), np.cos(xnode)
        sini, cosi = np.sin(xinc), np.cos(xinc)
        xmx = -snod * cosi
        xmy = cnod * cosi
        ux = xmx * sinsu + cnod * cossu
        uy = xmy * sinsu + snod * cossu
        uz = sini * sinsu
        vx = xmx * cossu - cnod * sinsu
        vy = xmy * cossu - snod * sinsu
        vz = sini * cossu

        re = g.radius_km
        vkmpersec = re * xke / 60.0
        r = np.stack([ux, uy, uz], axis=-1) * (mrt * re)[..., None]
        v = (np.stack([ux, uy, uz], axis=-1) * mvt[..., None]
             + np.stack([vx, vy, vz], axis=-1) * rvdot[..., None]) * vkmpersec

        status[(status == OK) & ~(mrt >= 1.0)] = DECAYED
        bad = status != OK
        if bad.any():
            r[bad] = np.nan
            v[bad] = np.nan
        if scalar:
            return r[0], v[0], status[0]
        return r, v, status
