"""Binary compressed sensing: LDPC sensing matrices, Glauber-dynamics decoding and baselines."""
