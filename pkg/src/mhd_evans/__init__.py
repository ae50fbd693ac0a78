"""Evans-function stability analysis of viscous MHD shock layers."""
