# Privacy Amplification Toolkit
