"""Textbook Black-Scholes call and greeks, written directly against scipy."""
import math

from scipy.stats import norm


def d1_d2(S, K, V, T, R):
    tvol = V * math.sqrt(T)
    d1 = (math.log(S / K) + R * T) / tvol + 0.5 * tvol
    return d1, d1 - tvol


def price(S, K, V, T, R):
    d1, d2 = d1_d2(S, K, V, T, R)
    return S * norm.cdf(d1) - K * math.exp(-R * T) * norm.cdf(d2)


def vega(S, K, V, T, R):
    d1, _ = d1_d2(S, K, V, T, R)
    return S * norm.pdf(d1) * math.sqrt(T)


def vanna(S, K, V, T, R):
    d1, d2 = d1_d2(S, K, V, T, R)
    return -norm.pdf(d1) * d2 / V


def volga(S, K, V, T, R):
    d1, d2 = d1_d2(S, K, V, T, R)
    return S * norm.pdf(d1) * d1 * d2 * T / (V * math.sqrt(T))


def delta(S, K, V, T, R):
    d1, _ = d1_d2(S, K, V, T, R)
    return norm.cdf(d1)


def gamma(S, K, V, T, R):
    d1, _ = d1_d2(S, K, V, T, R)
    return norm.pdf(d1) / (S * V * math.sqrt(T))
